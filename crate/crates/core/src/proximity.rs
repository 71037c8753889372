//! The set gap d(A,B), the proximal cores A0 and B0, and the table of
//! admissible pairs `(u, x)` with `d(u, Tx) = d(A,B)`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{format_coords, Location, MetricInstance, Point, PointId, Side, SpaceSet, ValidationReport};

/// Domain predicate of one affine piece on the line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Condition {
    Any,
    Eq(f64),
    Lt(f64),
    Le(f64),
    Gt(f64),
    Ge(f64),
    /// Closed interval `[lo, hi]`.
    Between(f64, f64),
}

impl Condition {
    /// Equality is tested within `eps`; the inequalities are exact.
    pub fn matches(&self, x: f64, eps: f64) -> bool {
        match *self {
            Condition::Any => true,
            Condition::Eq(v) => (x - v).abs() <= eps,
            Condition::Lt(v) => x < v,
            Condition::Le(v) => x <= v,
            Condition::Gt(v) => x > v,
            Condition::Ge(v) => x >= v,
            Condition::Between(lo, hi) => lo <= x && x <= hi,
        }
    }
}

/// `x -> slope * x + intercept` wherever `when` holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub when: Condition,
    pub slope: f64,
    pub intercept: f64,
}

/// The mapping T: A -> B.
#[derive(Debug, Clone, PartialEq)]
pub enum MappingSpec {
    /// Explicit images of the registry points of a finite A.
    Table(BTreeMap<PointId, Location>),
    /// Pieces on the line, first match wins.
    PiecewiseAffine1d(Vec<Piece>),
    /// `(x, y) -> M (x, y) + c`.
    Affine2d { matrix: [[f64; 2]; 2], offset: [f64; 2] },
}

impl MappingSpec {
    pub fn table<I: IntoIterator<Item = (PointId, Location)>>(entries: I) -> Self {
        MappingSpec::Table(entries.into_iter().collect())
    }

    pub fn apply(&self, inst: &MetricInstance, x: &Location) -> Result<Location> {
        match self {
            MappingSpec::Table(table) => {
                let id = match x {
                    Location::Point(id) => Some(*id),
                    Location::At(_) => match inst.a.members() {
                        Some(ids) => inst.resolve_member(ids, x)?,
                        None => None,
                    },
                };
                id.and_then(|id| table.get(&id))
                    .cloned()
                    .ok_or_else(|| Error::MappingUndefined(inst.describe(x)))
            }
            MappingSpec::PiecewiseAffine1d(pieces) => {
                let c = inst.coords(x)?;
                if c.len() != 1 {
                    return Err(Error::DimensionMismatch { expected: 1, found: c.len() });
                }
                pieces
                    .iter()
                    .find(|p| p.when.matches(c[0], inst.epsilon))
                    .map(|p| Location::at1(p.slope * c[0] + p.intercept))
                    .ok_or_else(|| Error::MappingUndefined(inst.describe(x)))
            }
            MappingSpec::Affine2d { matrix: m, offset } => {
                let c = inst.coords(x)?;
                if c.len() != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, found: c.len() });
                }
                Ok(Location::at2(
                    m[0][0] * c[0] + m[0][1] * c[1] + offset[0],
                    m[1][0] * c[0] + m[1][1] * c[1] + offset[1],
                ))
            }
        }
    }

    /// Whether the images of the given points are pairwise distinct.
    pub fn is_injective_on(&self, inst: &MetricInstance, ids: &[PointId]) -> Result<bool> {
        let images = ids
            .iter()
            .map(|&id| self.apply(inst, &Location::Point(id)))
            .collect::<Result<Vec<_>>>()?;
        for (i, p) in images.iter().enumerate() {
            for q in &images[i + 1..] {
                if inst.same_point(p, q)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Points of A at which the mapping is checked: all of a finite A, a grid
/// on continuum kinds.
fn mapping_probe_points(inst: &MetricInstance) -> Vec<Location> {
    match &inst.a {
        SpaceSet::Finite(ids) => ids.iter().map(|&id| Location::Point(id)).collect(),
        SpaceSet::IntervalUnion(ivs) => ivs
            .iter()
            .flat_map(|iv| (0..=50).map(move |i| Location::at1(lerp(iv.lo, iv.hi, i, 50))))
            .collect(),
        SpaceSet::Segment { from, to } => (0..=100)
            .map(|i| Location::at2(lerp(from[0], to[0], i, 100), lerp(from[1], to[1], i, 100)))
            .collect(),
        SpaceSet::Progression { start, step } => (0..100).map(|k| Location::at1(start + k as f64 * step)).collect(),
    }
}

/// `((n - i) * lo + i * hi) / n`, exact at both ends.
fn lerp(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    ((n - i) as f64 * lo + i as f64 * hi) / n as f64
}

/// Checks that T is defined on A and maps into B.
pub fn validate_mapping(inst: &MetricInstance, mapping: &MappingSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let dim = inst.space.dimension();
    let kind_ok = match mapping {
        MappingSpec::Table(_) if inst.a.members().is_none() => Err("table mappings need a finite A".to_string()),
        MappingSpec::PiecewiseAffine1d(_) if dim != Some(1) => Err("piecewise-affine-1d needs euclidean-1d".to_string()),
        MappingSpec::Affine2d { .. } if dim != Some(2) => Err("affine-2d needs euclidean-2d".to_string()),
        _ => Ok(()),
    };
    let applicable = kind_ok.is_ok();
    report.push("mapping-kind", kind_ok);
    if !applicable {
        return report;
    }
    let mut undefined = None;
    let mut outside = None;
    for x in mapping_probe_points(inst) {
        match mapping.apply(inst, &x) {
            Err(e) => {
                undefined.get_or_insert_with(|| e.to_string());
            }
            Ok(y) => match inst.contains(&inst.b, &y) {
                Ok(true) => {}
                Ok(false) => {
                    outside.get_or_insert_with(|| format!("T({}) = {} is not in B", inst.describe(&x), inst.describe(&y)));
                }
                Err(e) => {
                    outside.get_or_insert_with(|| e.to_string());
                }
            },
        }
    }
    report.push("mapping-total", undefined.map_or(Ok(()), Err));
    report.push("mapping-into-B", outside.map_or(Ok(()), Err));
    report
}

/// d(A,B).
pub fn gap_distance(inst: &MetricInstance) -> Result<f64> {
    inst.set_distance(&inst.a, &inst.b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximalCore {
    pub gap: f64,
    pub a0: Vec<PointId>,
    /// For a finite B, the members realizing the gap. For a continuum B, the
    /// witness points at distance gap from some element of A; with A finite
    /// these are exactly the elements of B0.
    pub b0: Vec<Location>,
}

/// A0 and B0 of an instance with finite A.
pub fn proximal_core(inst: &MetricInstance) -> Result<ProximalCore> {
    let a_ids = inst.finite(Side::A)?;
    let gap = gap_distance(inst)?;
    let eps = inst.epsilon;
    let mut a0 = Vec::new();
    for &id in a_ids {
        let (_, d) = inst.nearest_in_set(&inst.b, &Location::Point(id))?;
        if (d - gap).abs() <= eps {
            a0.push(id);
        }
    }
    let b0 = match &inst.b {
        SpaceSet::Finite(b_ids) => {
            let mut b0 = Vec::new();
            for &id in b_ids {
                let (_, d) = inst.nearest_in_set(&inst.a, &Location::Point(id))?;
                if (d - gap).abs() <= eps {
                    b0.push(Location::Point(id));
                }
            }
            b0
        }
        b => {
            let mut witnesses: Vec<Location> = Vec::new();
            for &id in a_ids {
                for w in inst.points_at_distance(b, &Location::Point(id), gap)? {
                    if !contains_location(inst, &witnesses, &w)? {
                        witnesses.push(w);
                    }
                }
            }
            witnesses.sort_by(|p, q| inst.lex_cmp(p, q));
            witnesses
        }
    };
    Ok(ProximalCore { gap, a0, b0 })
}

fn contains_location(inst: &MetricInstance, list: &[Location], loc: &Location) -> Result<bool> {
    for l in list {
        if inst.same_point(l, loc)? {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AdmissiblePair {
    pub u: PointId,
    pub x: PointId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximalPairTable {
    pub gap: f64,
    /// Ordered by the position of `x` in A, then of `u`.
    pub pairs: Vec<AdmissiblePair>,
    /// T over A.
    pub images: BTreeMap<PointId, Location>,
    pub a0: Vec<PointId>,
    pub b0: Vec<Location>,
    /// T(A0) is contained in B0.
    pub inclusion_holds: bool,
    /// Elements of A0 whose image misses B0.
    pub inclusion_failures: Vec<PointId>,
    /// A is a sample or truncation of a larger set.
    pub sampled: bool,
}

impl ProximalPairTable {
    pub fn image(&self, id: PointId) -> &Location {
        &self.images[&id]
    }

    pub fn contains(&self, u: PointId, x: PointId) -> bool {
        self.pairs.contains(&AdmissiblePair { u, x })
    }
}

/// Enumerates every `(u, x)` in A x A with `|d(u, Tx) - d(A,B)| <= eps`.
pub fn pair_table(inst: &MetricInstance, mapping: &MappingSpec) -> Result<ProximalPairTable> {
    let a_ids = inst.finite(Side::A)?;
    let core = proximal_core(inst)?;
    let gap = core.gap;
    let eps = inst.epsilon;

    let images: BTreeMap<PointId, Location> = a_ids
        .iter()
        .map(|&id| Ok((id, mapping.apply(inst, &Location::Point(id))?)))
        .collect::<Result<_>>()?;

    let per_x: Vec<Vec<AdmissiblePair>> = a_ids
        .par_iter()
        .map(|&x| {
            let tx = &images[&x];
            let mut row = Vec::new();
            for &u in a_ids {
                if (inst.distance(&Location::Point(u), tx)? - gap).abs() <= eps {
                    row.push(AdmissiblePair { u, x });
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let pairs = per_x.into_iter().flatten().collect();

    let mut inclusion_failures = Vec::new();
    for &x in &core.a0 {
        if !contains_location(inst, &core.b0, &images[&x])? {
            inclusion_failures.push(x);
        }
    }

    Ok(ProximalPairTable {
        gap,
        pairs,
        images,
        a0: core.a0,
        b0: core.b0,
        inclusion_holds: inclusion_failures.is_empty(),
        inclusion_failures,
        sampled: inst.sampled,
    })
}

/// Something a truncation can no longer see.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundaryNote {
    /// In A0 of the full instance, not of the truncation.
    CoreLost { point: PointId },
    /// Tx lies in B beyond its retained part.
    ImageOutside { x: PointId },
    /// An element of the full A at distance gap from Tx was not retained.
    PartnerOutside { x: PointId, partner: Location },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub instance: MetricInstance,
    pub mapping: MappingSpec,
    pub boundary: Vec<BoundaryNote>,
}

/// Restricts an instance to finitely many points: the first `n_max` terms of
/// each progression, and an `n_max`-point uniform grid on a segment A.
pub fn truncate_instance(inst: &MetricInstance, mapping: &MappingSpec, n_max: usize) -> Result<Truncation> {
    if n_max < 3 {
        return Err(Error::TruncationTooSmall(n_max));
    }
    let mut out = inst.clone();
    let a_changed = match &inst.a {
        SpaceSet::Finite(_) => false,
        SpaceSet::Progression { start, step } => {
            let coords = (0..n_max).map(|k| vec![start + k as f64 * step]).collect();
            out.a = SpaceSet::Finite(register(&mut out.points, coords));
            true
        }
        SpaceSet::Segment { from, to } => {
            let coords = (0..n_max)
                .map(|i| vec![lerp(from[0], to[0], i, n_max - 1), lerp(from[1], to[1], i, n_max - 1)])
                .collect();
            out.a = SpaceSet::Finite(register(&mut out.points, coords));
            true
        }
        SpaceSet::IntervalUnion(_) => return Err(Error::NotTruncatable(inst.a.kind())),
    };
    let b_changed = if inst.self_map {
        out.b = out.a.clone();
        a_changed
    } else if let SpaceSet::Progression { start, step } = &inst.b {
        let coords = (0..n_max).map(|k| vec![start + k as f64 * step]).collect();
        out.b = SpaceSet::Finite(register(&mut out.points, coords));
        true
    } else {
        false
    };
    if !a_changed && !b_changed {
        return Ok(Truncation { instance: out, mapping: mapping.clone(), boundary: vec![] });
    }
    out.sampled = inst.sampled || a_changed;

    let boundary = boundary_notes(inst, &out, mapping)?;
    Ok(Truncation { instance: out, mapping: mapping.clone(), boundary })
}

fn register(points: &mut Vec<Point>, coords: Vec<Vec<f64>>) -> Vec<PointId> {
    coords
        .into_iter()
        .map(|c| {
            let id = points.len();
            let label = format_coords(&c);
            points.push(Point::at(id, c).labeled(label));
            id
        })
        .collect()
}

fn boundary_notes(full: &MetricInstance, cut: &MetricInstance, mapping: &MappingSpec) -> Result<Vec<BoundaryNote>> {
    let eps = full.epsilon;
    let full_gap = gap_distance(full)?;
    let cut_gap = gap_distance(cut)?;
    let a_ids = cut.finite(Side::A)?;
    let mut notes = Vec::new();
    for &x in a_ids {
        let here = Location::Point(x);
        let at = Location::At(cut.coords(&here)?.to_vec());
        let in_full_core = (full.nearest_in_set(&full.b, &at)?.1 - full_gap).abs() <= eps;
        let in_cut_core = (cut.nearest_in_set(&cut.b, &here)?.1 - cut_gap).abs() <= eps;
        if in_full_core && !in_cut_core {
            notes.push(BoundaryNote::CoreLost { point: x });
        }
        let y = mapping.apply(cut, &here)?;
        if full.contains(&full.b, &y)? && !cut.contains(&cut.b, &y)? {
            notes.push(BoundaryNote::ImageOutside { x });
        }
        for partner in full.points_at_distance(&full.a, &y, full_gap)? {
            if cut.resolve_member(a_ids, &partner)?.is_none() {
                notes.push(BoundaryNote::PartnerOutside { x, partner });
            }
        }
    }
    Ok(notes)
}
