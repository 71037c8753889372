//! Points, sets and distances of a two-set metric instance.
//!
//! An instance lives in one ambient space: the real line, the Euclidean
//! plane, or an abstract space given by an explicit distance matrix. Points
//! that the instance names explicitly sit in a registry and are addressed by
//! dense ids; continuum sets (interval unions, segments, unbounded
//! progressions) are described by closed forms and their elements are plain
//! coordinates.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type PointId = usize;

/// Default tolerance for deciding equality of two real distances.
pub const DEFAULT_EPSILON: f64 = 1e-9;

/// An element of the ambient space: either a registry point or raw coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Point(PointId),
    At(Vec<f64>),
}

impl Location {
    pub fn at1(x: f64) -> Self {
        Location::At(vec![x])
    }

    pub fn at2(x: f64, y: f64) -> Self {
        Location::At(vec![x, y])
    }

    pub fn point_id(&self) -> Option<PointId> {
        match self {
            Location::Point(id) => Some(*id),
            Location::At(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub id: PointId,
    pub coords: Option<Vec<f64>>,
    pub label: Option<String>,
}

impl Point {
    pub fn at(id: PointId, coords: Vec<f64>) -> Self {
        Point { id, coords: Some(coords), label: None }
    }

    /// A point of a distance-matrix space.
    pub fn opaque(id: PointId) -> Self {
        Point { id, coords: None, label: None }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

/// Registry points on the real line, ids in input order.
pub fn points_1d(xs: &[f64]) -> Vec<Point> {
    xs.iter().enumerate().map(|(id, &x)| Point::at(id, vec![x])).collect()
}

/// Registry points in the plane, ids in input order.
pub fn points_2d(xs: &[[f64; 2]]) -> Vec<Point> {
    xs.iter().enumerate().map(|(id, p)| Point::at(id, p.to_vec())).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Space {
    Euclidean1d,
    Euclidean2d,
    DistanceMatrix(Vec<Vec<f64>>),
}

impl Space {
    pub fn dimension(&self) -> Option<usize> {
        match self {
            Space::Euclidean1d => Some(1),
            Space::Euclidean2d => Some(2),
            Space::DistanceMatrix(_) => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Space::Euclidean1d => "euclidean-1d",
            Space::Euclidean2d => "euclidean-2d",
            Space::DistanceMatrix(_) => "distance-matrix",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpaceSet {
    /// Registry points, by id.
    Finite(Vec<PointId>),
    /// Closed intervals on the line, sorted and pairwise disjoint.
    IntervalUnion(Vec<Interval>),
    /// Closed segment in the plane.
    Segment { from: [f64; 2], to: [f64; 2] },
    /// `{start + k * step : k = 0, 1, 2, ...}` on the line, `step > 0`.
    Progression { start: f64, step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetKind {
    FinitePointList,
    IntervalUnion1d,
    Segment2d,
    ArithmeticProgression,
}

impl fmt::Display for SetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SetKind::FinitePointList => "finite-point-list",
            SetKind::IntervalUnion1d => "interval-union-1d",
            SetKind::Segment2d => "segment-2d",
            SetKind::ArithmeticProgression => "arithmetic-progression",
        })
    }
}

impl SpaceSet {
    pub fn kind(&self) -> SetKind {
        match self {
            SpaceSet::Finite(_) => SetKind::FinitePointList,
            SpaceSet::IntervalUnion(_) => SetKind::IntervalUnion1d,
            SpaceSet::Segment { .. } => SetKind::Segment2d,
            SpaceSet::Progression { .. } => SetKind::ArithmeticProgression,
        }
    }

    pub fn members(&self) -> Option<&[PointId]> {
        match self {
            SpaceSet::Finite(ids) => Some(ids),
            _ => None,
        }
    }
}

/// Which of the two sets of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::A => "A",
            Side::B => "B",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricInstance {
    pub space: Space,
    pub points: Vec<Point>,
    pub a: SpaceSet,
    pub b: SpaceSet,
    pub epsilon: f64,
    /// A and B are the same set and T is a self-map.
    pub self_map: bool,
    /// A is a finite sample or truncation of a larger set.
    pub sampled: bool,
}

impl MetricInstance {
    pub fn new(space: Space, points: Vec<Point>, a: SpaceSet, b: SpaceSet) -> Self {
        MetricInstance {
            space,
            points,
            a,
            b,
            epsilon: DEFAULT_EPSILON,
            self_map: false,
            sampled: false,
        }
    }

    pub fn self_map(space: Space, points: Vec<Point>, x: SpaceSet) -> Self {
        MetricInstance {
            self_map: true,
            ..MetricInstance::new(space, points, x.clone(), x)
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn set(&self, side: Side) -> &SpaceSet {
        match side {
            Side::A => &self.a,
            Side::B => &self.b,
        }
    }

    pub fn point(&self, id: PointId) -> Result<&Point> {
        self.points.get(id).ok_or(Error::PointOutOfRange(id))
    }

    /// Members of a finite side, or `NotFinite`.
    pub fn finite(&self, side: Side) -> Result<&[PointId]> {
        self.set(side).members().ok_or(Error::NotFinite(side.name()))
    }

    pub fn coords<'a>(&'a self, loc: &'a Location) -> Result<&'a [f64]> {
        let dim = self.space.dimension().ok_or(Error::NoCoordinates)?;
        let coords = match loc {
            Location::Point(id) => self.point(*id)?.coords.as_deref().ok_or(Error::NoCoordinates)?,
            Location::At(c) => c.as_slice(),
        };
        if coords.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: coords.len() });
        }
        Ok(coords)
    }

    pub fn distance(&self, p: &Location, q: &Location) -> Result<f64> {
        match &self.space {
            Space::DistanceMatrix(m) => match (p, q) {
                (Location::Point(i), Location::Point(j)) => m
                    .get(*i)
                    .and_then(|row| row.get(*j))
                    .copied()
                    .ok_or(Error::PointOutOfRange((*i).max(*j))),
                _ => Err(Error::NoCoordinates),
            },
            _ => Ok(euclidean(self.coords(p)?, self.coords(q)?)),
        }
    }

    /// Same element: equal ids for registry points, otherwise within epsilon.
    pub fn same_point(&self, p: &Location, q: &Location) -> Result<bool> {
        if let (Location::Point(i), Location::Point(j)) = (p, q) {
            return Ok(i == j);
        }
        Ok(self.distance(p, q)? <= self.epsilon)
    }

    /// Human-readable name: the registry label, `#id`, or the coordinates.
    pub fn describe(&self, loc: &Location) -> String {
        match loc {
            Location::Point(id) => match self.points.get(*id) {
                Some(Point { label: Some(l), .. }) => l.clone(),
                Some(Point { coords: Some(c), .. }) => format_coords(c),
                _ => format!("#{id}"),
            },
            Location::At(c) => format_coords(c),
        }
    }

    /// Lexicographic order on coordinates, then on registry id.
    pub fn lex_cmp(&self, p: &Location, q: &Location) -> Ordering {
        let key = |loc: &Location| -> (Option<Vec<f64>>, PointId) {
            let coords = match loc {
                Location::Point(id) => self.points.get(*id).and_then(|pt| pt.coords.clone()),
                Location::At(c) => Some(c.clone()),
            };
            (coords, loc.point_id().unwrap_or(PointId::MAX))
        };
        let (pc, pid) = key(p);
        let (qc, qid) = key(q);
        let by_coords = match (pc, qc) {
            (Some(a), Some(b)) => a
                .iter()
                .zip(&b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal),
            _ => Ordering::Equal,
        };
        by_coords.then(pid.cmp(&qid))
    }

    /// Whether `cand` at distance `cd` beats `best` at distance `bd`:
    /// strictly closer beyond epsilon, or tied and lexicographically first.
    pub fn prefer(&self, cand: &Location, cd: f64, best: &Location, bd: f64) -> bool {
        if cd < bd - self.epsilon {
            true
        } else if cd > bd + self.epsilon {
            false
        } else {
            self.lex_cmp(cand, best) == Ordering::Less
        }
    }

    /// A closest element of `set` to `q` and its distance.
    pub fn nearest_in_set(&self, set: &SpaceSet, q: &Location) -> Result<(Location, f64)> {
        let mut candidates: Vec<Location> = Vec::new();
        match set {
            SpaceSet::Finite(ids) => {
                candidates.extend(ids.iter().map(|&id| Location::Point(id)));
            }
            SpaceSet::IntervalUnion(intervals) => {
                let x = self.coords(q)?[0];
                candidates.extend(intervals.iter().map(|iv| Location::at1(x.clamp(iv.lo, iv.hi))));
            }
            SpaceSet::Segment { from, to } => {
                let c = self.coords(q)?;
                let p = project_onto_segment([c[0], c[1]], *from, *to);
                candidates.push(Location::At(p.to_vec()));
            }
            SpaceSet::Progression { start, step } => {
                let x = self.coords(q)?[0];
                if x <= *start {
                    candidates.push(Location::at1(*start));
                } else {
                    let k = ((x - start) / step).floor();
                    candidates.push(Location::at1(start + k * step));
                    candidates.push(Location::at1(start + (k + 1.0) * step));
                }
            }
        }
        let mut best: Option<(Location, f64)> = None;
        for cand in candidates {
            let d = self.distance(&cand, q)?;
            let better = match &best {
                None => true,
                Some((b, bd)) => self.prefer(&cand, d, b, *bd),
            };
            if better {
                best = Some((cand, d));
            }
        }
        best.ok_or(Error::EmptySet("query set"))
    }

    /// Membership within epsilon.
    pub fn contains(&self, set: &SpaceSet, q: &Location) -> Result<bool> {
        if let (SpaceSet::Finite(ids), Location::Point(id)) = (set, q) {
            if ids.contains(id) {
                return Ok(true);
            }
        }
        if matches!(self.space, Space::DistanceMatrix(_)) {
            return Ok(false);
        }
        Ok(self.nearest_in_set(set, q)?.1 <= self.epsilon)
    }

    /// The registry member of `ids` that coincides with `loc`, if any.
    pub fn resolve_member(&self, ids: &[PointId], loc: &Location) -> Result<Option<PointId>> {
        if let Location::Point(id) = loc {
            return Ok(ids.contains(id).then_some(*id));
        }
        for &id in ids {
            if self.distance(&Location::Point(id), loc)? <= self.epsilon {
                return Ok(Some(id));
            }
        }
        Ok(None)
    }

    /// All elements of `set` at distance `r` (within epsilon) from `center`.
    pub fn points_at_distance(&self, set: &SpaceSet, center: &Location, r: f64) -> Result<Vec<Location>> {
        let eps = self.epsilon;
        let mut out: Vec<Location> = Vec::new();
        match set {
            SpaceSet::Finite(ids) => {
                for &id in ids {
                    let loc = Location::Point(id);
                    if (self.distance(&loc, center)? - r).abs() <= eps {
                        out.push(loc);
                    }
                }
            }
            SpaceSet::IntervalUnion(_) | SpaceSet::Progression { .. } => {
                let x = self.coords(center)?[0];
                for cand in [x - r, x + r] {
                    let loc = Location::at1(cand);
                    if self.contains(set, &loc)? && !out.iter().any(|o| same_coords(o, &loc, eps)) {
                        out.push(loc);
                    }
                }
            }
            SpaceSet::Segment { from, to } => {
                let c = self.coords(center)?;
                for p in circle_segment_intersections([c[0], c[1]], r, *from, *to, eps) {
                    out.push(Location::At(p.to_vec()));
                }
            }
        }
        Ok(out)
    }

    /// Infimum of distances between two sets, in closed form.
    pub fn set_distance(&self, s: &SpaceSet, t: &SpaceSet) -> Result<f64> {
        use SpaceSet::*;
        if let Some(ids) = s.members() {
            return self.finite_to_set(ids, t, "A");
        }
        if let Some(ids) = t.members() {
            return self.finite_to_set(ids, s, "B");
        }
        match (s, t) {
            (IntervalUnion(xs), IntervalUnion(ys)) => {
                let mut best = f64::INFINITY;
                for x in xs {
                    for y in ys {
                        best = best.min((y.lo - x.hi).max(x.lo - y.hi).max(0.0));
                    }
                }
                if best.is_finite() {
                    Ok(best)
                } else {
                    Err(Error::EmptySet("interval union"))
                }
            }
            (Segment { from: p1, to: p2 }, Segment { from: q1, to: q2 }) => {
                Ok(segment_distance(*p1, *p2, *q1, *q2))
            }
            (Progression { start: s1, step: d1 }, Progression { start: s2, step: d2 }) => {
                progression_gap(*s1, *d1, *s2, *d2)
                    .ok_or(Error::UnsupportedCombination(s.kind(), t.kind()))
            }
            (Progression { start, step }, IntervalUnion(ivs))
            | (IntervalUnion(ivs), Progression { start, step }) => {
                ivs.iter()
                    .map(|iv| progression_to_interval(*start, *step, *iv))
                    .reduce(f64::min)
                    .ok_or(Error::EmptySet("interval union"))
            }
            _ => Err(Error::UnsupportedCombination(s.kind(), t.kind())),
        }
    }

    fn finite_to_set(&self, ids: &[PointId], other: &SpaceSet, side: &'static str) -> Result<f64> {
        if ids.is_empty() {
            return Err(Error::EmptySet(side));
        }
        let mut best = f64::INFINITY;
        for &id in ids {
            best = best.min(self.nearest_in_set(other, &Location::Point(id))?.1);
        }
        Ok(best)
    }
}

fn euclidean(p: &[f64], q: &[f64]) -> f64 {
    match p.len() {
        1 => (p[0] - q[0]).abs(),
        2 => (p[0] - q[0]).hypot(p[1] - q[1]),
        _ => p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
    }
}

fn same_coords(a: &Location, b: &Location, eps: f64) -> bool {
    match (a, b) {
        (Location::At(x), Location::At(y)) => euclidean(x, y) <= eps,
        _ => a == b,
    }
}

pub fn format_coords(c: &[f64]) -> String {
    match c {
        [x] => format!("{x}"),
        _ => {
            let parts: Vec<String> = c.iter().map(|x| format!("{x}")).collect();
            format!("({})", parts.join(", "))
        }
    }
}

fn sub(p: [f64; 2], q: [f64; 2]) -> [f64; 2] {
    [p[0] - q[0], p[1] - q[1]]
}

fn dot(p: [f64; 2], q: [f64; 2]) -> f64 {
    p[0] * q[0] + p[1] * q[1]
}

fn cross(p: [f64; 2], q: [f64; 2]) -> f64 {
    p[0] * q[1] - p[1] * q[0]
}

/// Closest point of the closed segment `[from, to]` to `p`.
pub fn project_onto_segment(p: [f64; 2], from: [f64; 2], to: [f64; 2]) -> [f64; 2] {
    // axis-aligned segments project exactly
    if from[1] == to[1] {
        return [p[0].clamp(from[0].min(to[0]), from[0].max(to[0])), from[1]];
    }
    if from[0] == to[0] {
        return [from[0], p[1].clamp(from[1].min(to[1]), from[1].max(to[1]))];
    }
    let dir = sub(to, from);
    if dot(dir, sub(p, to)) >= 0.0 {
        return to;
    }
    let t = dot(dir, sub(p, from));
    if t <= 0.0 {
        return from;
    }
    let len2 = dot(dir, dir);
    if len2 <= 0.0 {
        return from;
    }
    let t = t / len2;
    [from[0] + dir[0] * t, from[1] + dir[1] * t]
}

fn point_segment_distance(p: [f64; 2], from: [f64; 2], to: [f64; 2]) -> f64 {
    let c = project_onto_segment(p, from, to);
    euclidean(&p, &c)
}

fn on_segment(p: [f64; 2], from: [f64; 2], to: [f64; 2]) -> bool {
    p[0] >= from[0].min(to[0])
        && p[0] <= from[0].max(to[0])
        && p[1] >= from[1].min(to[1])
        && p[1] <= from[1].max(to[1])
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = cross(sub(q2, q1), sub(p1, q1));
    let d2 = cross(sub(q2, q1), sub(p2, q1));
    let d3 = cross(sub(p2, p1), sub(q1, p1));
    let d4 = cross(sub(p2, p1), sub(q2, p1));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(p1, q1, q2))
        || (d2 == 0.0 && on_segment(p2, q1, q2))
        || (d3 == 0.0 && on_segment(q1, p1, p2))
        || (d4 == 0.0 && on_segment(q2, p1, p2))
}

fn segment_distance(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> f64 {
    if segments_intersect(p1, p2, q1, q2) {
        return 0.0;
    }
    [
        point_segment_distance(p1, q1, q2),
        point_segment_distance(p2, q1, q2),
        point_segment_distance(q1, p1, p2),
        point_segment_distance(q2, p1, p2),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

/// Points of the segment at distance `r` from `c`; tangency within `eps`
/// yields the single foot point.
fn circle_segment_intersections(c: [f64; 2], r: f64, from: [f64; 2], to: [f64; 2], eps: f64) -> Vec<[f64; 2]> {
    let dir = sub(to, from);
    let len2 = dot(dir, dir);
    if len2 <= 0.0 {
        return if (euclidean(&c, &from) - r).abs() <= eps { vec![from] } else { vec![] };
    }
    let len = len2.sqrt();
    let t0 = dot(sub(c, from), dir) / len2;
    let foot = [from[0] + dir[0] * t0, from[1] + dir[1] * t0];
    let h = euclidean(&c, &foot);
    let slack = eps / len;
    let at = |t: f64| {
        let t = t.clamp(0.0, 1.0);
        [from[0] + dir[0] * t, from[1] + dir[1] * t]
    };
    let in_range = |t: f64| t >= -slack && t <= 1.0 + slack;
    let mut out = Vec::new();
    if (h - r).abs() <= eps {
        if in_range(t0) {
            out.push(at(t0));
        }
    } else if h < r {
        let s = (r * r - h * h).sqrt() / len;
        for t in [t0 - s, t0 + s] {
            if in_range(t) {
                out.push(at(t));
            }
        }
    }
    out
}

fn as_integer(x: f64) -> Option<i64> {
    (x.fract() == 0.0 && x.abs() < 9.0e15).then_some(x as i64)
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

/// Gap between two unbounded integer progressions. Every multiple of
/// `gcd(d1, d2)` is a difference `i*d1 - j*d2` with `i, j >= 0`, so the gap
/// is the distance from `s1 - s2` to the nearest such multiple.
fn progression_gap(s1: f64, d1: f64, s2: f64, d2: f64) -> Option<f64> {
    let (s1, d1, s2, d2) = (as_integer(s1)?, as_integer(d1)?, as_integer(s2)?, as_integer(d2)?);
    if d1 <= 0 || d2 <= 0 {
        return None;
    }
    let g = gcd(d1, d2);
    let r = (s1 - s2).rem_euclid(g);
    Some(r.min(g - r) as f64)
}

fn progression_to_interval(start: f64, step: f64, iv: Interval) -> f64 {
    if iv.hi < start {
        return start - iv.hi;
    }
    let k = ((iv.lo - start) / step).ceil().max(0.0);
    let first = start + k * step;
    if first <= iv.hi {
        return 0.0;
    }
    let mut best = first - iv.hi;
    if k >= 1.0 {
        best = best.min(iv.lo - (start + (k - 1.0) * step));
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// `Some(true)` when A and B are disjoint; `None` for self-maps or when undecided.
    pub disjoint: Option<bool>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn push(&mut self, name: &str, result: std::result::Result<(), String>) {
        let (passed, detail) = match result {
            Ok(()) => (true, None),
            Err(d) => (false, Some(d)),
        };
        self.checks.push(Check { name: name.to_string(), passed, detail });
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.checks.extend(other.checks);
    }
}

/// Checks the metric axioms and the well-formedness of A and B.
pub fn validate_instance(inst: &MetricInstance) -> ValidationReport {
    let mut report = ValidationReport::default();
    let eps = inst.epsilon;

    report.push(
        "epsilon",
        if inst.epsilon.is_finite() && inst.epsilon > 0.0 {
            Ok(())
        } else {
            Err(format!("epsilon must be positive, got {}", inst.epsilon))
        },
    );

    report.push(
        "point-ids",
        match inst.points.iter().enumerate().find(|(i, p)| p.id != *i) {
            None => Ok(()),
            Some((i, p)) => Err(format!("point at position {i} has id {}; ids must be 0..n-1", p.id)),
        },
    );

    let dim = inst.space.dimension();
    report.push(
        "point-coordinates",
        inst.points
            .iter()
            .try_for_each(|p| match (dim, &p.coords) {
                (Some(d), Some(c)) if c.len() == d && c.iter().all(|x| x.is_finite()) => Ok(()),
                (Some(d), Some(c)) => Err(format!("point {} has {} coordinates, space needs {d} finite values", p.id, c.len())),
                (Some(_), None) => Err(format!("point {} has no coordinates", p.id)),
                (None, Some(_)) => Err(format!("point {} has coordinates in a distance-matrix space", p.id)),
                (None, None) => Ok(()),
            }),
    );

    let mut labels: Vec<&str> = inst.points.iter().filter_map(|p| p.label.as_deref()).collect();
    labels.sort_unstable();
    report.push(
        "point-labels",
        match labels.windows(2).find(|w| w[0] == w[1]) {
            None => Ok(()),
            Some(w) => Err(format!("label {:?} is used twice", w[0])),
        },
    );

    match &inst.space {
        Space::DistanceMatrix(m) => validate_matrix(&mut report, m, inst.points.len(), eps),
        _ => {
            let mut dup = None;
            'outer: for (i, p) in inst.points.iter().enumerate() {
                for q in &inst.points[i + 1..] {
                    if let (Some(a), Some(b)) = (&p.coords, &q.coords) {
                        if a == b {
                            dup = Some((p.id, q.id));
                            break 'outer;
                        }
                    }
                }
            }
            report.push(
                "identity",
                match dup {
                    None => Ok(()),
                    Some((i, j)) => Err(format!("points {i} and {j} have identical coordinates")),
                },
            );
        }
    }

    for side in [Side::A, Side::B] {
        let set = inst.set(side);
        report.push(&format!("set-{}", side.name()), validate_set(inst, set));
        report.push(
            &format!("{}-nonempty", side.name()),
            if set_is_empty(set) { Err(format!("{} is empty", side.name())) } else { Ok(()) },
        );
    }

    if inst.self_map {
        report.push(
            "self-map",
            if inst.a == inst.b { Ok(()) } else { Err("self-map instances need A = B".into()) },
        );
        report.disjoint = None;
    } else if report.passed() {
        match disjoint(inst) {
            Ok(true) => {
                report.disjoint = Some(true);
                report.push("disjoint", Ok(()));
            }
            Ok(false) => {
                report.disjoint = Some(false);
                report.push("disjoint", Err("A and B intersect".into()));
            }
            Err(e) => {
                report.checks.push(Check {
                    name: "disjoint".into(),
                    passed: true,
                    detail: Some(format!("not decided: {e}")),
                });
            }
        }
    }
    report
}

fn validate_matrix(report: &mut ValidationReport, m: &[Vec<f64>], n: usize, eps: f64) {
    let square = m.len() == n && m.iter().all(|row| row.len() == n);
    report.push(
        "matrix-shape",
        if square { Ok(()) } else { Err(format!("matrix must be {n}x{n} to match the point registry")) },
    );
    if !square {
        return;
    }
    report.push(
        "nonnegative",
        match (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).find(|&(i, j)| !(m[i][j] >= 0.0 && m[i][j].is_finite())) {
            None => Ok(()),
            Some((i, j)) => Err(format!("d({i},{j}) = {} is not a finite nonnegative number", m[i][j])),
        },
    );
    report.push(
        "symmetry",
        match (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).find(|&(i, j)| m[i][j] != m[j][i]) {
            None => Ok(()),
            Some((i, j)) => Err(format!("d({i},{j}) = {} but d({j},{i}) = {}", m[i][j], m[j][i])),
        },
    );
    report.push(
        "identity",
        (0..n).try_for_each(|i| {
            if m[i][i] != 0.0 {
                return Err(format!("d({i},{i}) = {} is not zero", m[i][i]));
            }
            match (0..n).find(|&j| j != i && m[i][j] == 0.0) {
                Some(j) => Err(format!("d({i},{j}) = 0 for distinct points")),
                None => Ok(()),
            }
        }),
    );
    let mut violation = None;
    'scan: for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if m[i][k] > m[i][j] + m[j][k] + eps {
                    violation = Some((i, j, k));
                    break 'scan;
                }
            }
        }
    }
    report.push(
        "triangle-inequality",
        match violation {
            None => Ok(()),
            Some((i, j, k)) => Err(format!(
                "triple ({i},{j},{k}): d({i},{k}) = {} > d({i},{j}) + d({j},{k}) = {}",
                m[i][k],
                m[i][j] + m[j][k]
            )),
        },
    );
}

fn validate_set(inst: &MetricInstance, set: &SpaceSet) -> std::result::Result<(), String> {
    let dim = inst.space.dimension();
    match set {
        SpaceSet::Finite(ids) => {
            if let Some(&id) = ids.iter().find(|&&id| id >= inst.points.len()) {
                return Err(format!("point id {id} is out of range"));
            }
            let mut sorted = ids.clone();
            sorted.sort_unstable();
            if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
                return Err(format!("point id {} is listed twice", w[0]));
            }
            Ok(())
        }
        SpaceSet::IntervalUnion(ivs) => {
            if dim != Some(1) {
                return Err(format!("interval unions need euclidean-1d, not {}", inst.space.name()));
            }
            for iv in ivs {
                if !(iv.lo.is_finite() && iv.hi.is_finite() && iv.lo <= iv.hi) {
                    return Err(format!("interval [{}, {}] is malformed", iv.lo, iv.hi));
                }
            }
            match ivs.windows(2).find(|w| w[0].hi >= w[1].lo) {
                None => Ok(()),
                Some(w) => Err(format!(
                    "intervals [{}, {}] and [{}, {}] are not sorted and disjoint",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )),
            }
        }
        SpaceSet::Segment { from, to } => {
            if dim != Some(2) {
                return Err(format!("segments need euclidean-2d, not {}", inst.space.name()));
            }
            if from.iter().chain(to).all(|x| x.is_finite()) {
                Ok(())
            } else {
                Err("segment endpoints must be finite".into())
            }
        }
        SpaceSet::Progression { start, step } => {
            if dim != Some(1) {
                return Err(format!("progressions need euclidean-1d, not {}", inst.space.name()));
            }
            if start.is_finite() && step.is_finite() && *step > 0.0 {
                Ok(())
            } else {
                Err(format!("progression start {start}, step {step}: step must be positive"))
            }
        }
    }
}

fn set_is_empty(set: &SpaceSet) -> bool {
    match set {
        SpaceSet::Finite(ids) => ids.is_empty(),
        SpaceSet::IntervalUnion(ivs) => ivs.is_empty(),
        SpaceSet::Segment { .. } | SpaceSet::Progression { .. } => false,
    }
}

fn disjoint(inst: &MetricInstance) -> Result<bool> {
    if let (SpaceSet::Finite(a), SpaceSet::Finite(b)) = (&inst.a, &inst.b) {
        if a.iter().any(|id| b.contains(id)) {
            return Ok(false);
        }
        if matches!(inst.space, Space::DistanceMatrix(_)) {
            return Ok(true);
        }
    }
    Ok(inst.set_distance(&inst.a, &inst.b)? > inst.epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_example() -> MetricInstance {
        MetricInstance::new(
            Space::Euclidean1d,
            points_1d(&[-3.0, 0.0, 3.0, 4.0]),
            SpaceSet::Finite(vec![0, 1, 2, 3]),
            SpaceSet::IntervalUnion(vec![Interval::new(-2.0, -1.0), Interval::new(1.0, 2.0)]),
        )
    }

    fn matrix(m: Vec<Vec<f64>>) -> MetricInstance {
        let n = m.len();
        MetricInstance::new(
            Space::DistanceMatrix(m),
            (0..n).map(Point::opaque).collect(),
            SpaceSet::Finite(vec![0]),
            SpaceSet::Finite((1..n).collect()),
        )
    }

    fn plane() -> MetricInstance {
        MetricInstance::new(
            Space::Euclidean2d,
            vec![],
            SpaceSet::Segment { from: [-1.0, 1.0], to: [1.0, 1.0] },
            SpaceSet::Segment { from: [-1.0, 0.0], to: [1.0, 0.0] },
        )
    }

    #[test]
    fn euclidean_distances() {
        let inst = plane();
        assert_eq!(inst.distance(&Location::at2(1.0, 2.0), &Location::at2(0.0, 2.0)).unwrap(), 1.0);
        let d = inst.distance(&Location::at2(1.0, 1.0), &Location::at2(2.0, 0.0)).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        let p = Location::at2(0.3, -7.0);
        assert_eq!(inst.distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn distance_errors() {
        let inst = plane();
        assert_eq!(
            inst.distance(&Location::at1(1.0), &Location::at2(0.0, 0.0)),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        );
        let m = matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(m.distance(&Location::Point(0), &Location::Point(5)), Err(Error::PointOutOfRange(5)));
        assert_eq!(m.distance(&Location::Point(0), &Location::at1(0.0)), Err(Error::NoCoordinates));
    }

    #[test]
    fn two_point_matrix_is_valid() {
        let report = validate_instance(&matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]]));
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.disjoint, Some(true));
    }

    #[test]
    fn triangle_violation_is_reported_with_triple() {
        let report = validate_instance(&matrix(vec![
            vec![0.0, 1.0, 3.0],
            vec![1.0, 0.0, 1.0],
            vec![3.0, 1.0, 0.0],
        ]));
        let check = report.check("triangle-inequality").unwrap();
        assert!(!check.passed);
        assert!(check.detail.as_ref().unwrap().starts_with("triple (0,1,2)"));
    }

    #[test]
    fn asymmetric_and_nonzero_diagonal_matrices_fail() {
        let report = validate_instance(&matrix(vec![vec![0.0, 1.0], vec![2.0, 0.0]]));
        assert!(!report.check("symmetry").unwrap().passed);
        let report = validate_instance(&matrix(vec![vec![0.5, 1.0], vec![1.0, 0.0]]));
        assert!(!report.check("identity").unwrap().passed);
    }

    #[test]
    fn first_example_validates_as_disjoint() {
        let report = validate_instance(&first_example());
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.disjoint, Some(true));
    }

    #[test]
    fn overlapping_intervals_fail() {
        let mut inst = first_example();
        inst.b = SpaceSet::IntervalUnion(vec![Interval::new(-2.0, 1.0), Interval::new(0.5, 2.0)]);
        assert!(!validate_instance(&inst).check("set-B").unwrap().passed);
    }

    #[test]
    fn intersecting_sets_fail_disjointness() {
        let mut inst = first_example();
        inst.b = SpaceSet::IntervalUnion(vec![Interval::new(3.5, 5.0)]);
        let report = validate_instance(&inst);
        assert_eq!(report.disjoint, Some(false));
        assert!(!report.passed());
    }

    #[test]
    fn nearest_in_interval_union() {
        let inst = first_example();
        let (p, d) = inst.nearest_in_set(&inst.b, &Location::at1(1.5)).unwrap();
        assert_eq!((p, d), (Location::at1(1.5), 0.0));
        // equidistant from -1 and 1: the lexicographically smaller wins
        let (p, d) = inst.nearest_in_set(&inst.b, &Location::at1(0.0)).unwrap();
        assert_eq!((p, d), (Location::at1(-1.0), 1.0));
    }

    #[test]
    fn nearest_on_segment_is_vertical_projection() {
        let inst = plane();
        let (p, d) = inst.nearest_in_set(&inst.a, &Location::at2(0.1, 0.0)).unwrap();
        assert_eq!(p, Location::at2(0.1, 1.0));
        assert_eq!(d, 1.0);
        let (p, _) = inst.nearest_in_set(&inst.a, &Location::at2(3.0, 1.0)).unwrap();
        assert_eq!(p, Location::at2(1.0, 1.0));
    }

    #[test]
    fn nearest_in_progression() {
        let inst = MetricInstance::new(
            Space::Euclidean1d,
            vec![],
            SpaceSet::Progression { start: 7.0, step: 4.0 },
            SpaceSet::Progression { start: 2.0, step: 2.0 },
        );
        assert_eq!(inst.nearest_in_set(&inst.a, &Location::at1(-5.0)).unwrap(), (Location::at1(7.0), 12.0));
        assert_eq!(inst.nearest_in_set(&inst.a, &Location::at1(12.0)).unwrap(), (Location::at1(11.0), 1.0));
        // 13 is equidistant from 11 and 15
        assert_eq!(inst.nearest_in_set(&inst.a, &Location::at1(13.0)).unwrap(), (Location::at1(11.0), 2.0));
        assert!(inst.contains(&inst.b, &Location::at1(6.0)).unwrap());
        assert!(!inst.contains(&inst.b, &Location::at1(7.0)).unwrap());
        assert_eq!(inst.set_distance(&inst.a, &inst.b).unwrap(), 1.0);
    }

    #[test]
    fn nearest_in_finite_set_breaks_ties_lexicographically() {
        let inst = MetricInstance::new(
            Space::Euclidean1d,
            points_1d(&[1.0, -1.0, 5.0]),
            SpaceSet::Finite(vec![0, 1, 2]),
            SpaceSet::Finite(vec![]),
        );
        assert_eq!(inst.nearest_in_set(&inst.a, &Location::at1(0.0)).unwrap(), (Location::Point(1), 1.0));
    }

    #[test]
    fn set_distances_in_closed_form() {
        let inst = plane();
        assert_eq!(inst.set_distance(&inst.a, &inst.b).unwrap(), 1.0);
        let crossing = SpaceSet::Segment { from: [0.0, -1.0], to: [0.0, 2.0] };
        assert_eq!(inst.set_distance(&inst.a, &crossing).unwrap(), 0.0);
        assert_eq!(first_example().set_distance(&first_example().a, &first_example().b).unwrap(), 1.0);
        let line = MetricInstance::new(
            Space::Euclidean1d,
            vec![],
            SpaceSet::IntervalUnion(vec![Interval::new(0.0, 1.0)]),
            SpaceSet::Progression { start: 7.0, step: 4.0 },
        );
        assert_eq!(line.set_distance(&line.a, &line.b).unwrap(), 6.0);
        let far = SpaceSet::IntervalUnion(vec![Interval::new(12.0, 13.0)]);
        assert_eq!(line.set_distance(&far, &line.b).unwrap(), 1.0);
        assert_eq!(
            inst.set_distance(&inst.a, &SpaceSet::Progression { start: 0.0, step: 1.0 }),
            Err(Error::UnsupportedCombination(SetKind::Segment2d, SetKind::ArithmeticProgression))
        );
    }

    #[test]
    fn circle_meets_segment_at_tangent_and_secant_points() {
        let inst = plane();
        let tangent = inst.points_at_distance(&inst.b, &Location::at2(0.5, 1.0), 1.0).unwrap();
        assert_eq!(tangent, vec![Location::at2(0.5, 0.0)]);
        let secant = inst.points_at_distance(&inst.b, &Location::at2(0.0, 0.6), 1.0).unwrap();
        assert_eq!(secant.len(), 2);
        for p in &secant {
            assert!((inst.distance(p, &Location::at2(0.0, 0.6)).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
