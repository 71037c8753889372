//! Exhaustive verifiers for the proximal and perimetric contraction
//! conditions, Condition Λ, and period-2 detection on self-maps.
//!
//! Every verifier scans the finite relation of admissible pairs. Ratios are
//! reduced with an associative max; ties and counterexamples are resolved to
//! the lexicographically smallest configuration, so results do not depend on
//! how the scan is split across threads.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{Location, MetricInstance, PointId, Side};
use crate::proximity::{pair_table, MappingSpec, ProximalPairTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContractionKind {
    #[serde(rename = "proximal1")]
    ProximalFirst,
    #[serde(rename = "proximal2")]
    ProximalSecond,
    #[serde(rename = "perimetric1")]
    PerimetricFirst,
    #[serde(rename = "perimetric2")]
    PerimetricSecond,
    #[serde(rename = "triangle")]
    TrianglePerimeter,
}

impl ContractionKind {
    pub const ALL: [ContractionKind; 5] = [
        ContractionKind::ProximalFirst,
        ContractionKind::ProximalSecond,
        ContractionKind::PerimetricFirst,
        ContractionKind::PerimetricSecond,
        ContractionKind::TrianglePerimeter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ContractionKind::ProximalFirst => "proximal1",
            ContractionKind::ProximalSecond => "proximal2",
            ContractionKind::PerimetricFirst => "perimetric1",
            ContractionKind::PerimetricSecond => "perimetric2",
            ContractionKind::TrianglePerimeter => "triangle",
        }
    }
}

impl fmt::Display for ContractionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ContractionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ContractionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown contraction kind {s:?}")))
    }
}

/// One checked configuration: pre-images `us`, points `xs`, and the two
/// sides of the inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub us: Vec<PointId>,
    pub xs: Vec<PointId>,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, present when `rhs > eps`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum VerificationStatus {
    Contraction { alpha_min: f64, extremal: Option<Witness> },
    NotContraction { witness: Witness, sup_ratio: Option<f64> },
    Vacuous { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub kind: ContractionKind,
    pub status: VerificationStatus,
    /// Configurations satisfying the distinctness constraint.
    pub triples_checked: usize,
    pub sampled: bool,
}

impl VerificationReport {
    pub fn is_contraction(&self) -> bool {
        matches!(self.status, VerificationStatus::Contraction { .. })
    }

    pub fn alpha_min(&self) -> Option<f64> {
        match self.status {
            VerificationStatus::Contraction { alpha_min, .. } => Some(alpha_min),
            _ => None,
        }
    }
}

/// Pairwise distances among A and among the images T(A), by position in A.
struct Distances {
    n: usize,
    source: Vec<f64>,
    image: Vec<f64>,
}

impl Distances {
    fn new(inst: &MetricInstance, ids: &[PointId], images: &[Location]) -> Result<Self> {
        let n = ids.len();
        let mut source = vec![0.0; n * n];
        let mut image = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = inst.distance(&Location::Point(ids[i]), &Location::Point(ids[j]))?;
                let e = inst.distance(&images[i], &images[j])?;
                source[i * n + j] = d;
                source[j * n + i] = d;
                image[i * n + j] = e;
                image[j * n + i] = e;
            }
        }
        Ok(Distances { n, source, image })
    }

    fn d(&self, i: usize, j: usize) -> f64 {
        self.source[i * self.n + j]
    }

    fn t(&self, i: usize, j: usize) -> f64 {
        self.image[i * self.n + j]
    }
}

fn perimeter(d: impl Fn(usize, usize) -> f64, i: usize, j: usize, k: usize) -> f64 {
    d(i, j) + d(j, k) + d(k, i)
}

/// A configuration's index tuple and its two sides.
#[derive(Debug, Clone, Copy)]
struct Config {
    idx: [usize; 3],
    lhs: f64,
    rhs: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Scan {
    checked: usize,
    best: Option<(f64, Config)>,
    violation: Option<Config>,
}

impl Scan {
    fn push(mut self, c: Config, eps: f64) -> Self {
        self.checked += 1;
        if c.rhs > eps {
            let r = c.lhs / c.rhs;
            let better = match self.best {
                None => true,
                Some((br, bc)) => r > br || (r == br && c.idx < bc.idx),
            };
            if better {
                self.best = Some((r, c));
            }
        }
        let violates = if c.rhs > eps { c.lhs >= c.rhs - eps } else { c.lhs > eps };
        if violates && self.violation.is_none_or(|v| c.idx < v.idx) {
            self.violation = Some(c);
        }
        self
    }

    fn merge(self, other: Scan) -> Scan {
        let best = match (self.best, other.best) {
            (Some(a), Some(b)) => Some(if b.0 > a.0 || (b.0 == a.0 && b.1.idx < a.1.idx) { b } else { a }),
            (a, b) => a.or(b),
        };
        let violation = match (self.violation, other.violation) {
            (Some(a), Some(b)) => Some(if b.idx < a.idx { b } else { a }),
            (a, b) => a.or(b),
        };
        Scan { checked: self.checked + other.checked, best, violation }
    }
}

struct Scanner<'a> {
    eps: f64,
    dist: &'a Distances,
    /// Position in A of each pair's `u` and `x`.
    us: Vec<usize>,
    xs: Vec<usize>,
}

impl Scanner<'_> {
    fn pairs<F>(&self, config: F) -> Scan
    where
        F: Fn(usize, usize) -> Option<(f64, f64)> + Sync,
    {
        let m = self.us.len();
        (0..m)
            .into_par_iter()
            .map(|i| {
                let mut scan = Scan::default();
                for j in i + 1..m {
                    if let Some((lhs, rhs)) = config(i, j) {
                        scan = scan.push(Config { idx: [i, j, 0], lhs, rhs }, self.eps);
                    }
                }
                scan
            })
            .reduce(Scan::default, Scan::merge)
    }

    fn triples<F>(&self, config: F) -> Scan
    where
        F: Fn(usize, usize, usize) -> Option<(f64, f64)> + Sync,
    {
        let m = self.us.len();
        (0..m)
            .into_par_iter()
            .map(|i| {
                let mut scan = Scan::default();
                for j in i + 1..m {
                    for k in j + 1..m {
                        if let Some((lhs, rhs)) = config(i, j, k) {
                            scan = scan.push(Config { idx: [i, j, k], lhs, rhs }, self.eps);
                        }
                    }
                }
                scan
            })
            .reduce(Scan::default, Scan::merge)
    }
}

struct Prepared {
    ids: Vec<PointId>,
    dist: Distances,
    us: Vec<usize>,
    xs: Vec<usize>,
}

fn prepare(inst: &MetricInstance, table: &ProximalPairTable) -> Result<Prepared> {
    let ids = inst.finite(Side::A)?.to_vec();
    let pos: HashMap<PointId, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let images: Vec<Location> = ids.iter().map(|id| table.image(*id).clone()).collect();
    let dist = Distances::new(inst, &ids, &images)?;
    let lookup = |id: PointId| pos.get(&id).copied().ok_or(Error::NotInSet(format!("#{id}"), "A"));
    let us = table.pairs.iter().map(|p| lookup(p.u)).collect::<Result<_>>()?;
    let xs = table.pairs.iter().map(|p| lookup(p.x)).collect::<Result<_>>()?;
    Ok(Prepared { ids, dist, us, xs })
}

fn report(
    kind: ContractionKind,
    scan: Scan,
    sampled: bool,
    arity: usize,
    witness: impl Fn(&Config) -> (Vec<PointId>, Vec<PointId>),
    eps: f64,
    vacuous: &str,
) -> VerificationReport {
    let make = |c: &Config| {
        let (us, xs) = witness(c);
        Witness {
            us: us[..arity].to_vec(),
            xs: xs[..arity].to_vec(),
            lhs: c.lhs,
            rhs: c.rhs,
            ratio: (c.rhs > eps).then(|| c.lhs / c.rhs),
        }
    };
    let status = if scan.checked == 0 {
        VerificationStatus::Vacuous { reason: vacuous.to_string() }
    } else if let Some(v) = &scan.violation {
        VerificationStatus::NotContraction { witness: make(v), sup_ratio: scan.best.map(|b| b.0) }
    } else {
        VerificationStatus::Contraction {
            alpha_min: scan.best.map_or(0.0, |b| b.0),
            extremal: scan.best.map(|b| make(&b.1)),
        }
    };
    VerificationReport { kind, status, triples_checked: scan.checked, sampled }
}

fn pair_witness(p: &Prepared) -> impl Fn(&Config) -> (Vec<PointId>, Vec<PointId>) + '_ {
    move |c: &Config| {
        let us = c.idx.iter().map(|&i| p.ids[p.us[i]]).collect();
        let xs = c.idx.iter().map(|&i| p.ids[p.xs[i]]).collect();
        (us, xs)
    }
}

/// `d(u1,u2) <= alpha d(x1,x2)` over admissible pairs with `x1 != x2`.
pub fn verify_proximal_first(inst: &MetricInstance, table: &ProximalPairTable) -> Result<VerificationReport> {
    let p = prepare(inst, table)?;
    let s = Scanner { eps: inst.epsilon, dist: &p.dist, us: p.us.clone(), xs: p.xs.clone() };
    let scan = s.pairs(|i, j| {
        let (x1, x2) = (s.xs[i], s.xs[j]);
        (x1 != x2).then(|| (s.dist.d(s.us[i], s.us[j]), s.dist.d(x1, x2)))
    });
    Ok(report(
        ContractionKind::ProximalFirst,
        scan,
        table.sampled,
        2,
        pair_witness(&p),
        inst.epsilon,
        "fewer than two admissible pairs with distinct x",
    ))
}

/// `d(Tu1,Tu2) <= alpha d(Tx1,Tx2)` over admissible pairs with `Tx1 != Tx2`.
pub fn verify_proximal_second(inst: &MetricInstance, table: &ProximalPairTable) -> Result<VerificationReport> {
    let p = prepare(inst, table)?;
    let eps = inst.epsilon;
    let s = Scanner { eps, dist: &p.dist, us: p.us.clone(), xs: p.xs.clone() };
    let scan = s.pairs(|i, j| {
        let rhs = s.dist.t(s.xs[i], s.xs[j]);
        (rhs > eps).then(|| (s.dist.t(s.us[i], s.us[j]), rhs))
    });
    Ok(report(
        ContractionKind::ProximalSecond,
        scan,
        table.sampled,
        2,
        pair_witness(&p),
        eps,
        "fewer than two admissible pairs with distinct images",
    ))
}

/// Perimeter of `u1 u2 u3` against `alpha` times the perimeter of `x1 x2 x3`,
/// over triples of admissible pairs with pairwise distinct x. The u's may repeat.
pub fn verify_perimetric_first(inst: &MetricInstance, table: &ProximalPairTable) -> Result<VerificationReport> {
    let p = prepare(inst, table)?;
    let s = Scanner { eps: inst.epsilon, dist: &p.dist, us: p.us.clone(), xs: p.xs.clone() };
    let d = |a, b| s.dist.d(a, b);
    let scan = s.triples(|i, j, k| {
        let (x1, x2, x3) = (s.xs[i], s.xs[j], s.xs[k]);
        (x1 != x2 && x2 != x3 && x1 != x3)
            .then(|| (perimeter(d, s.us[i], s.us[j], s.us[k]), perimeter(d, x1, x2, x3)))
    });
    Ok(report(
        ContractionKind::PerimetricFirst,
        scan,
        table.sampled,
        3,
        pair_witness(&p),
        inst.epsilon,
        "no three admissible pairs with pairwise distinct x",
    ))
}

/// Image-side perimeters of `Tu` against those of `Tx`, over triples of
/// admissible pairs with pairwise distinct images `Tx`.
pub fn verify_perimetric_second(inst: &MetricInstance, table: &ProximalPairTable) -> Result<VerificationReport> {
    let p = prepare(inst, table)?;
    let eps = inst.epsilon;
    let s = Scanner { eps, dist: &p.dist, us: p.us.clone(), xs: p.xs.clone() };
    let t = |a, b| s.dist.t(a, b);
    let scan = s.triples(|i, j, k| {
        let (x1, x2, x3) = (s.xs[i], s.xs[j], s.xs[k]);
        (t(x1, x2) > eps && t(x2, x3) > eps && t(x1, x3) > eps)
            .then(|| (perimeter(t, s.us[i], s.us[j], s.us[k]), perimeter(t, x1, x2, x3)))
    });
    Ok(report(
        ContractionKind::PerimetricSecond,
        scan,
        table.sampled,
        3,
        pair_witness(&p),
        eps,
        "no three admissible pairs with pairwise distinct images",
    ))
}

/// Perimeter contraction of a self-map over all triples of distinct points.
pub fn verify_triangle_perimeter_selfmap(inst: &MetricInstance, mapping: &MappingSpec) -> Result<VerificationReport> {
    if !inst.self_map {
        return Err(Error::NotSelfMap);
    }
    let ids = inst.finite(Side::A)?.to_vec();
    if ids.len() < 3 {
        return Err(Error::TooFewPoints { need: 3, found: ids.len() });
    }
    let images = ids
        .iter()
        .map(|&id| mapping.apply(inst, &Location::Point(id)))
        .collect::<Result<Vec<_>>>()?;
    let image_ids = images
        .iter()
        .map(|y| inst.resolve_member(&ids, y)?.ok_or_else(|| Error::NotInSet(inst.describe(y), "X")))
        .collect::<Result<Vec<_>>>()?;
    let dist = Distances::new(inst, &ids, &images)?;
    let n = ids.len();
    let s = Scanner { eps: inst.epsilon, dist: &dist, us: (0..n).collect(), xs: (0..n).collect() };
    let scan = s.triples(|i, j, k| {
        Some((perimeter(|a, b| dist.t(a, b), i, j, k), perimeter(|a, b| dist.d(a, b), i, j, k)))
    });
    Ok(report(
        ContractionKind::TrianglePerimeter,
        scan,
        inst.sampled,
        3,
        |c| (c.idx.iter().map(|&i| image_ids[i]).collect(), c.idx.iter().map(|&i| ids[i]).collect()),
        inst.epsilon,
        "fewer than three points",
    ))
}

/// Builds the pair table when needed and runs the requested verifier.
pub fn verify(inst: &MetricInstance, mapping: &MappingSpec, kind: ContractionKind) -> Result<VerificationReport> {
    if kind == ContractionKind::TrianglePerimeter {
        return verify_triangle_perimeter_selfmap(inst, mapping);
    }
    let table = pair_table(inst, mapping)?;
    verify_with_table(inst, &table, kind)
}

pub fn verify_with_table(inst: &MetricInstance, table: &ProximalPairTable, kind: ContractionKind) -> Result<VerificationReport> {
    match kind {
        ContractionKind::ProximalFirst => verify_proximal_first(inst, table),
        ContractionKind::ProximalSecond => verify_proximal_second(inst, table),
        ContractionKind::PerimetricFirst => verify_perimetric_first(inst, table),
        ContractionKind::PerimetricSecond => verify_perimetric_second(inst, table),
        ContractionKind::TrianglePerimeter => Err(Error::InvalidArgument(
            "the triangle verifier works on the mapping, not on a pair table".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum LambdaReport {
    Satisfied,
    /// `x != y` with `d(x, Ty) = d(y, Tx) = d(A,B)`.
    Violated { x: PointId, y: PointId },
}

impl LambdaReport {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, LambdaReport::Satisfied)
    }
}

/// Condition Λ: no distinct `x, y` with both `(x, y)` and `(y, x)` admissible.
pub fn check_condition_lambda(inst: &MetricInstance, table: &ProximalPairTable) -> Result<LambdaReport> {
    let order: HashMap<PointId, usize> = inst.finite(Side::A)?.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let admissible: HashSet<(PointId, PointId)> = table.pairs.iter().map(|p| (p.u, p.x)).collect();
    let witness = table
        .pairs
        .iter()
        .filter(|p| p.u != p.x && admissible.contains(&(p.x, p.u)))
        .map(|p| if order[&p.u] < order[&p.x] { (p.u, p.x) } else { (p.x, p.u) })
        .min_by_key(|&(x, y)| (order[&x], order[&y]));
    Ok(match witness {
        None => LambdaReport::Satisfied,
        Some((x, y)) => LambdaReport::Violated { x, y },
    })
}

/// Two-cycles `(x, Tx)` of a finite self-map, each listed once with `x` first in X.
pub fn detect_period_two(inst: &MetricInstance, mapping: &MappingSpec) -> Result<Vec<(PointId, PointId)>> {
    if !inst.self_map {
        return Err(Error::NotSelfMap);
    }
    let ids = inst.finite(Side::A)?;
    let order: HashMap<PointId, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let step = |x: PointId| -> Result<PointId> {
        let y = mapping.apply(inst, &Location::Point(x))?;
        inst.resolve_member(ids, &y)?.ok_or_else(|| Error::NotInSet(inst.describe(&y), "X"))
    };
    let mut cycles = Vec::new();
    for &x in ids {
        let y = step(x)?;
        if y != x && step(y)? == x && order[&x] < order[&y] {
            cycles.push((x, y));
        }
    }
    Ok(cycles)
}
