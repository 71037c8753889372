//! Proximal Picard iteration towards a best proximity point, and the
//! brute-force enumerator that serves as its oracle.
//!
//! Starting from `u0` in A0, each step picks `u_{n+1}` in A with
//! `d(u_{n+1}, T u_n) = d(A,B)`. The trace keeps the iterates, every
//! admissible candidate per step, and the perimeters
//! `t_n = d(u_n,u_{n+1}) + d(u_{n+1},u_{n+2}) + d(u_{n+2},u_n)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{Location, MetricInstance, Side, SpaceSet};
use crate::proximity::{gap_distance, MappingSpec};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iter: usize,
    /// Cauchy threshold on `d(u_n, u_{n+1})`, separate from the instance epsilon.
    pub tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { max_iter: DEFAULT_MAX_ITER, tol: DEFAULT_TOL }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// `u_{n+1} = u_n`.
    ConvergedFixed,
    /// `d(u_n, u_{n+1}) <= tol` without exact repetition.
    ConvergedCauchy,
    /// No element of A realizes the gap against `T u_n`.
    NoProximalSuccessor,
    /// `u_{n+2} = u_n` with `u_{n+1} != u_n`.
    LambdaViolation,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestProximityPoint {
    pub point: Location,
    /// `d(x, Tx) - d(A,B)`.
    pub residual: f64,
}

/// Early exits of the second-kind argument, read off the image sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum ImageEvent {
    /// `T u_n = T u_{n+1}`: `u_{n+1}` is a best proximity point.
    ImagesCoincide { n: usize },
    /// `T u_n = T u_{n+2}` with `T u_n != T u_{n+1}`: Condition Λ fails.
    LambdaPattern { n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub gap: f64,
    /// Whether `u0` itself realizes the gap; later iterates always do.
    pub start_in_core: bool,
    pub iterates: Vec<Location>,
    /// Admissible successors seen at each step, in preference order.
    pub candidates: Vec<Vec<Location>>,
    /// `d(u_n, u_{n+1})`.
    pub step_lengths: Vec<f64>,
    pub perimeters: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_perimeters: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub image_events: Vec<ImageEvent>,
    pub termination: Termination,
    pub result: Option<BestProximityPoint>,
}

impl SolverTrace {
    pub fn iterations(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }
}

fn perimeter(inst: &MetricInstance, p: &Location, q: &Location, r: &Location) -> Result<f64> {
    Ok(inst.distance(p, q)? + inst.distance(q, r)? + inst.distance(r, p)?)
}

fn perimeters_of(inst: &MetricInstance, seq: &[Location]) -> Result<Vec<f64>> {
    seq.windows(3).map(|w| perimeter(inst, &w[0], &w[1], &w[2])).collect()
}

/// Admissible successors of `current`, best first: closest to `current`,
/// ties broken lexicographically, then by id.
fn successors(inst: &MetricInstance, mapping: &MappingSpec, current: &Location, gap: f64) -> Result<Vec<Location>> {
    let y = mapping.apply(inst, current)?;
    let eps = inst.epsilon;
    match &inst.a {
        SpaceSet::Finite(ids) => {
            let mut found = Vec::new();
            for &id in ids {
                let u = Location::Point(id);
                if (inst.distance(&u, &y)? - gap).abs() <= eps {
                    let d = inst.distance(&u, current)?;
                    found.push((u, d));
                }
            }
            found.sort_by(|(p, dp), (q, dq)| {
                if inst.prefer(p, *dp, q, *dq) {
                    std::cmp::Ordering::Less
                } else if inst.prefer(q, *dq, p, *dp) {
                    std::cmp::Ordering::Greater
                } else {
                    std::cmp::Ordering::Equal
                }
            });
            Ok(found.into_iter().map(|(u, _)| u).collect())
        }
        SpaceSet::Segment { .. } | SpaceSet::IntervalUnion(_) => {
            let (u, d) = inst.nearest_in_set(&inst.a, &y)?;
            Ok(if (d - gap).abs() <= eps { vec![u] } else { vec![] })
        }
        SpaceSet::Progression { .. } => Err(Error::NotFinite("A")),
    }
}

fn result_at(inst: &MetricInstance, mapping: &MappingSpec, u: &Location, gap: f64) -> Result<BestProximityPoint> {
    let residual = inst.distance(u, &mapping.apply(inst, u)?)? - gap;
    Ok(BestProximityPoint { point: u.clone(), residual })
}

/// Runs the proximal iteration from `u0`.
pub fn iterate_bpp(inst: &MetricInstance, mapping: &MappingSpec, u0: &Location, opts: SolveOptions) -> Result<SolverTrace> {
    if opts.max_iter < 1 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let gap = gap_distance(inst)?;
    let eps = inst.epsilon;
    let finite_a = inst.a.members().is_some();

    let u0 = match inst.a.members() {
        Some(ids) => Location::Point(
            inst.resolve_member(ids, u0)?
                .ok_or_else(|| Error::NotInSet(inst.describe(u0), "A"))?,
        ),
        None => {
            if !inst.contains(&inst.a, u0)? {
                return Err(Error::NotInSet(inst.describe(u0), "A"));
            }
            u0.clone()
        }
    };
    let start_in_core = (inst.nearest_in_set(&inst.b, &u0)?.1 - gap).abs() <= eps;

    let mut iterates = vec![u0];
    let mut candidates = Vec::new();
    let mut step_lengths = Vec::new();
    let termination = loop {
        if iterates.len() > opts.max_iter {
            break Termination::MaxIterations;
        }
        let current = iterates.last().expect("non-empty").clone();
        let options = successors(inst, mapping, &current, gap)?;
        let Some(next) = options.first().cloned() else {
            break Termination::NoProximalSuccessor;
        };
        candidates.push(options);
        let step = inst.distance(&current, &next)?;
        step_lengths.push(step);
        let fixed = if finite_a { next == current } else { step <= eps };
        let n = iterates.len();
        let back_two = n >= 2 && inst.same_point(&next, &iterates[n - 2])?;
        iterates.push(next);
        if fixed {
            break Termination::ConvergedFixed;
        }
        if step <= opts.tol {
            break Termination::ConvergedCauchy;
        }
        if back_two {
            break Termination::LambdaViolation;
        }
    };

    let result = match termination {
        Termination::ConvergedFixed | Termination::ConvergedCauchy => {
            Some(result_at(inst, mapping, iterates.last().expect("non-empty"), gap)?)
        }
        _ => None,
    };
    Ok(SolverTrace {
        gap,
        start_in_core,
        perimeters: perimeters_of(inst, &iterates)?,
        iterates,
        candidates,
        step_lengths,
        image_perimeters: None,
        image_events: Vec::new(),
        termination,
        result,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BppResult {
    pub points: Vec<BestProximityPoint>,
    /// At most two best proximity points.
    pub count_bound_ok: bool,
    pub sampled: bool,
}

impl BppResult {
    pub fn locations(&self) -> Vec<Location> {
        self.points.iter().map(|p| p.point.clone()).collect()
    }
}

/// Every x in a finite A with `|d(x, Tx) - d(A,B)| <= eps`.
pub fn enumerate_bpp(inst: &MetricInstance, mapping: &MappingSpec) -> Result<BppResult> {
    let ids = inst.finite(Side::A)?;
    let gap = gap_distance(inst)?;
    let eps = inst.epsilon;
    let found: Vec<Option<BestProximityPoint>> = ids
        .par_iter()
        .map(|&id| {
            let x = Location::Point(id);
            let residual = inst.distance(&x, &mapping.apply(inst, &x)?)? - gap;
            Ok((residual.abs() <= eps).then_some(BestProximityPoint { point: x, residual }))
        })
        .collect::<Result<_>>()?;
    let points: Vec<_> = found.into_iter().flatten().collect();
    Ok(BppResult { count_bound_ok: points.len() <= 2, points, sampled: inst.sampled })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayStep {
    pub n: usize,
    pub t_n: f64,
    pub t_next: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometricBound {
    pub n: usize,
    /// `d(u_n, u_{n+1})`.
    pub step: f64,
    pub t_n: f64,
    /// `alpha^n * t_0`.
    pub bound: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub alpha: f64,
    pub steps: Vec<DecayStep>,
    pub geometric: Vec<GeometricBound>,
    /// `max_n (t_{n+1} - alpha t_n)` over steps with `t_n > eps`.
    pub max_excess: Option<f64>,
    pub passed: bool,
}

/// Checks `t_{n+1} <= alpha t_n` wherever `t_n > eps`, and the geometric
/// envelope `d(u_n, u_{n+1}) <= t_n <= alpha^n t_0`, all within `eps`.
pub fn perimeter_decay_check(trace: &SolverTrace, alpha: f64, eps: f64) -> Result<DecayReport> {
    if trace.iterates.len() < 4 {
        return Err(Error::TraceTooShort { len: trace.iterates.len(), need: 4 });
    }
    let t = &trace.perimeters;
    let steps: Vec<DecayStep> = t
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] > eps)
        .map(|(n, w)| DecayStep { n, t_n: w[0], t_next: w[1], ok: w[1] <= alpha * w[0] + eps })
        .collect();
    let geometric: Vec<GeometricBound> = t
        .iter()
        .enumerate()
        .map(|(n, &t_n)| {
            let bound = alpha.powi(n as i32) * t[0];
            let step = trace.step_lengths[n];
            GeometricBound { n, step, t_n, bound, ok: step <= t_n + eps && t_n <= bound + eps }
        })
        .collect();
    let max_excess = steps.iter().map(|s| s.t_next - alpha * s.t_n).reduce(f64::max);
    let passed = steps.iter().all(|s| s.ok) && geometric.iter().all(|g| g.ok);
    Ok(DecayReport { alpha, steps, geometric, max_excess, passed })
}

/// Fills in the image perimeters over `T u_n` and the first early-exit event.
pub fn image_trace_diagnostics(inst: &MetricInstance, mapping: &MappingSpec, trace: &SolverTrace) -> Result<SolverTrace> {
    let mut out = trace.clone();
    if trace.iterates.len() < 3 {
        out.image_perimeters = Some(Vec::new());
        out.image_events = Vec::new();
        return Ok(out);
    }
    let images = trace
        .iterates
        .iter()
        .map(|u| mapping.apply(inst, u))
        .collect::<Result<Vec<_>>>()?;
    out.image_perimeters = Some(perimeters_of(inst, &images)?);
    out.image_events = Vec::new();
    for n in 0..images.len() - 1 {
        if inst.same_point(&images[n], &images[n + 1])? {
            out.image_events.push(ImageEvent::ImagesCoincide { n });
            break;
        }
        if n + 2 < images.len()
            && !inst.same_point(&images[n + 1], &images[n + 2])?
            && inst.same_point(&images[n], &images[n + 2])?
        {
            out.image_events.push(ImageEvent::LambdaPattern { n });
            break;
        }
    }
    Ok(out)
}
