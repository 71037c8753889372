//! Bundled example corpus and its golden expectations.
//!
//! Each `<name>.expect.json` names an instance file in the same directory and
//! lists checks; a check runs one operation, optionally on a truncation, and
//! compares selected fields against expected values.

use std::path::{Path, PathBuf};

use proxima_core::proximity::{pair_table, BoundaryNote};
use proxima_core::solver::{image_trace_diagnostics, perimeter_decay_check, ImageEvent};
use proxima_core::verify::{verify_triangle_perimeter_selfmap, verify_with_table, VerificationStatus, Witness};
use proxima_core::{
    check_condition_lambda, detect_period_two, enumerate_bpp, iterate_bpp, ContractionKind, LambdaReport, Location,
    MetricInstance, SolveOptions, SolverTrace, Termination,
};
use serde::Deserialize;

use crate::commands::parse_start;
use crate::document::{load_instance, read_document, validate_document, DocumentError, LoadOptions, LoadedInstance, Real};
use crate::report::{CheckOutcome, CorpusOutcome};

pub const CORPUS_ENV: &str = "PROXIMA_CORPUS_DIR";

/// `$PROXIMA_CORPUS_DIR`, or the corpus shipped with this crate.
pub fn corpus_dir() -> PathBuf {
    match std::env::var_os(CORPUS_ENV) {
        Some(dir) => PathBuf::from(dir),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus"),
    }
}

/// Entry names, sorted.
pub fn list_entries(dir: &Path) -> Result<Vec<String>, DocumentError> {
    let io = |e: std::io::Error| DocumentError::Io { path: dir.display().to_string(), message: e.to_string() };
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let file = entry.map_err(io)?.file_name().to_string_lossy().into_owned();
        if let Some(name) = file.strip_suffix(".expect.json") {
            names.push(name.to_string());
        }
    }
    names.sort();
    Ok(names)
}

/// A point named by its label, or given by coordinates.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PointRef {
    Label(String),
    Coords(Vec<Real>),
}

impl PointRef {
    fn show(&self) -> String {
        match self {
            PointRef::Label(l) => l.clone(),
            PointRef::Coords(c) => {
                let parts: Vec<String> = c.iter().map(|r| r.to_string()).collect();
                format!("({})", parts.join(", "))
            }
        }
    }

    fn resolve(&self, inst: &MetricInstance) -> Result<Location, String> {
        match self {
            PointRef::Label(l) => inst
                .points
                .iter()
                .find(|p| p.label.as_deref() == Some(l))
                .map(|p| Location::Point(p.id))
                .ok_or_else(|| format!("no point labelled {l:?}")),
            PointRef::Coords(c) => Ok(Location::At(c.iter().map(|r| r.0).collect())),
        }
    }

    fn matches(&self, inst: &MetricInstance, actual: &Location, tol: f64) -> bool {
        match self {
            PointRef::Label(l) => inst.describe(actual) == *l,
            PointRef::Coords(c) => match inst.coords(actual) {
                Ok(a) => a.len() == c.len() && a.iter().zip(c).map(|(x, y)| (x - y.0).powi(2)).sum::<f64>().sqrt() <= tol,
                Err(_) => false,
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectationFile {
    pub instance: String,
    #[serde(default)]
    pub description: Option<String>,
    pub checks: Vec<GoldenCheck>,
}

/// Exactly one operation field must be present.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldenCheck {
    #[serde(default)]
    pub truncate: Option<usize>,
    #[serde(default)]
    pub note: Option<String>,
    #[serde(default)]
    pub validate: Option<ValidateExpect>,
    #[serde(default)]
    pub distance: Option<DistanceExpect>,
    #[serde(default)]
    pub nearest: Option<NearestExpect>,
    #[serde(default)]
    pub analyze: Option<AnalyzeExpect>,
    #[serde(default)]
    pub verify: Option<VerifyExpect>,
    #[serde(default)]
    pub lambda: Option<LambdaExpect>,
    #[serde(default)]
    pub solve: Option<SolveExpect>,
    #[serde(default)]
    pub decay: Option<DecayExpect>,
    #[serde(default)]
    pub diagnostics: Option<DiagnosticsExpect>,
    #[serde(default)]
    pub enumerate: Option<EnumerateExpect>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateExpect {
    pub passed: bool,
    #[serde(default)]
    pub disjoint: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceExpect {
    pub from: PointRef,
    pub to: PointRef,
    pub value: Real,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NearestExpect {
    /// `"A"` or `"B"`.
    pub set: String,
    pub query: Vec<Real>,
    pub point: Vec<Real>,
    pub distance: Real,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeExpect {
    #[serde(default)]
    pub gap: Option<Real>,
    /// The (possibly truncated) A, in order.
    #[serde(default)]
    pub a: Option<Vec<PointRef>>,
    #[serde(default)]
    pub a0: Option<Vec<PointRef>>,
    /// A0 equals all of A.
    #[serde(default)]
    pub a0_is_a: Option<bool>,
    /// A0 together with the points noted as `core-lost` by the truncation
    /// covers all of the retained A.
    #[serde(default)]
    pub full_core_covers_a: Option<bool>,
    #[serde(default)]
    pub b0: Option<Vec<PointRef>>,
    #[serde(default)]
    pub pairs: Option<Vec<[PointRef; 2]>>,
    #[serde(default)]
    pub pairs_include: Option<Vec<[PointRef; 2]>>,
    #[serde(default)]
    pub inclusion_holds: Option<bool>,
    /// `[x, Tx]` records.
    #[serde(default)]
    pub images: Option<Vec<[PointRef; 2]>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessExpect {
    pub us: Vec<PointRef>,
    pub xs: Vec<PointRef>,
    #[serde(default)]
    pub lhs: Option<Real>,
    #[serde(default)]
    pub rhs: Option<Real>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyExpect {
    pub kind: ContractionKind,
    /// `contraction`, `not-contraction` or `vacuous`.
    pub status: String,
    #[serde(default)]
    pub alpha_min: Option<Real>,
    #[serde(default)]
    pub alpha_at_most: Option<Real>,
    #[serde(default)]
    pub tol: Option<Real>,
    #[serde(default)]
    pub witness: Option<WitnessExpect>,
    #[serde(default)]
    pub sampled: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaExpect {
    pub satisfied: bool,
    #[serde(default)]
    pub pair: Option<[PointRef; 2]>,
    #[serde(default)]
    pub period_two: Option<Vec<[PointRef; 2]>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveExpect {
    pub start: String,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub tol: Option<Real>,
    pub termination: Termination,
    #[serde(default)]
    pub iterates: Option<Vec<PointRef>>,
    #[serde(default)]
    pub point: Option<PointRef>,
    /// Distance allowed between the result and `point`.
    #[serde(default)]
    pub within: Option<Real>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub start_in_core: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayExpect {
    pub start: String,
    pub alpha: Real,
    pub passed: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsExpect {
    pub start: String,
    pub events: Vec<ImageEvent>,
    /// Every ratio of consecutive positive image perimeters.
    #[serde(default)]
    pub image_ratio: Option<Real>,
    #[serde(default)]
    pub tol: Option<Real>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnumerateExpect {
    pub points: Vec<PointRef>,
    #[serde(default)]
    pub count_bound_ok: Option<bool>,
}

/// Collects named comparisons for one check.
struct Tally {
    prefix: String,
    out: Vec<CheckOutcome>,
}

impl Tally {
    fn record(&mut self, field: &str, result: Result<(), String>) {
        let (passed, detail) = match result {
            Ok(()) => (true, None),
            Err(d) => (false, Some(d)),
        };
        self.out.push(CheckOutcome { check: format!("{}.{field}", self.prefix), passed, detail });
    }

    fn real(&mut self, field: &str, actual: f64, expected: f64, tol: f64) {
        self.record(
            field,
            if (actual - expected).abs() <= tol {
                Ok(())
            } else {
                Err(format!("expected {expected}, found {actual}"))
            },
        );
    }

    fn equal<T: PartialEq + std::fmt::Debug>(&mut self, field: &str, actual: T, expected: T) {
        self.record(
            field,
            if actual == expected {
                Ok(())
            } else {
                Err(format!("expected {expected:?}, found {actual:?}"))
            },
        );
    }
}

fn show_all(inst: &MetricInstance, locs: &[Location]) -> String {
    let names: Vec<String> = locs.iter().map(|l| inst.describe(l)).collect();
    format!("{{{}}}", names.join(", "))
}

fn show_refs(refs: &[PointRef]) -> String {
    let names: Vec<String> = refs.iter().map(PointRef::show).collect();
    format!("{{{}}}", names.join(", "))
}

/// Set equality: a bijection between `actual` and `expected`.
fn same_set(inst: &MetricInstance, actual: &[Location], expected: &[PointRef], tol: f64) -> Result<(), String> {
    let mismatch = || Err(format!("expected {}, found {}", show_refs(expected), show_all(inst, actual)));
    if actual.len() != expected.len() {
        return mismatch();
    }
    let mut used = vec![false; actual.len()];
    for e in expected {
        match (0..actual.len()).find(|&i| !used[i] && e.matches(inst, &actual[i], tol)) {
            Some(i) => used[i] = true,
            None => return mismatch(),
        }
    }
    Ok(())
}

fn same_sequence(inst: &MetricInstance, actual: &[Location], expected: &[PointRef], tol: f64) -> Result<(), String> {
    if actual.len() == expected.len() && actual.iter().zip(expected).all(|(a, e)| e.matches(inst, a, tol)) {
        Ok(())
    } else {
        Err(format!("expected {}, found {}", show_refs(expected), show_all(inst, actual)))
    }
}

fn same_pairs(inst: &MetricInstance, actual: &[(Location, Location)], expected: &[[PointRef; 2]], subset: bool, tol: f64) -> Result<(), String> {
    let show = |inst: &MetricInstance, pairs: &[(Location, Location)]| -> String {
        let items: Vec<String> = pairs.iter().map(|(u, x)| format!("({}, {})", inst.describe(u), inst.describe(x))).collect();
        format!("{{{}}}", items.join(", "))
    };
    let expected_str = || {
        let items: Vec<String> = expected.iter().map(|[u, x]| format!("({}, {})", u.show(), x.show())).collect();
        format!("{{{}}}", items.join(", "))
    };
    if !subset && actual.len() != expected.len() {
        return Err(format!("expected {}, found {}", expected_str(), show(inst, actual)));
    }
    let mut used = vec![false; actual.len()];
    for [eu, ex] in expected {
        let hit = (0..actual.len()).find(|&i| !used[i] && eu.matches(inst, &actual[i].0, tol) && ex.matches(inst, &actual[i].1, tol));
        match hit {
            Some(i) => used[i] = true,
            None => {
                let relation = if subset { "to include" } else { "" };
                return Err(format!("expected {relation} {}, found {}", expected_str(), show(inst, actual)).replace("  ", " "));
            }
        }
    }
    Ok(())
}

fn witness_matches(inst: &MetricInstance, w: &Witness, e: &WitnessExpect, tol: f64) -> Result<(), String> {
    let us: Vec<Location> = w.us.iter().map(|&id| Location::Point(id)).collect();
    let xs: Vec<Location> = w.xs.iter().map(|&id| Location::Point(id)).collect();
    same_sequence(inst, &us, &e.us, tol).map_err(|d| format!("us: {d}"))?;
    same_sequence(inst, &xs, &e.xs, tol).map_err(|d| format!("xs: {d}"))?;
    for (name, actual, expected) in [("lhs", w.lhs, e.lhs), ("rhs", w.rhs, e.rhs)] {
        if let Some(v) = expected {
            if (actual - v.0).abs() > tol {
                return Err(format!("{name}: expected {}, found {actual}", v.0));
            }
        }
    }
    Ok(())
}

fn solve(loaded: &LoadedInstance, start: &str, max_iter: Option<usize>, tol: Option<Real>) -> proxima_core::Result<SolverTrace> {
    let inst = &loaded.instance;
    let mut opts = SolveOptions::default();
    if let Some(m) = max_iter {
        opts.max_iter = m;
    }
    if let Some(t) = tol {
        opts.tol = t.0;
    }
    let trace = iterate_bpp(inst, &loaded.mapping, &parse_start(inst, start)?, opts)?;
    image_trace_diagnostics(inst, &loaded.mapping, &trace)
}

impl GoldenCheck {
    fn operation(&self) -> Result<&'static str, String> {
        let present: Vec<&'static str> = [
            ("validate", self.validate.is_some()),
            ("distance", self.distance.is_some()),
            ("nearest", self.nearest.is_some()),
            ("analyze", self.analyze.is_some()),
            ("verify", self.verify.is_some()),
            ("lambda", self.lambda.is_some()),
            ("solve", self.solve.is_some()),
            ("decay", self.decay.is_some()),
            ("diagnostics", self.diagnostics.is_some()),
            ("enumerate", self.enumerate.is_some()),
        ]
        .into_iter()
        .filter_map(|(name, set)| set.then_some(name))
        .collect();
        match present.as_slice() {
            [one] => Ok(one),
            _ => Err(format!("a check needs exactly one operation, found {present:?}")),
        }
    }

    fn evaluate(&self, loaded: &LoadedInstance, tally: &mut Tally) -> proxima_core::Result<()> {
        let inst = &loaded.instance;
        let mapping = &loaded.mapping;
        let eps = inst.epsilon;
        if let Some(e) = &self.distance {
            let (p, q) = match (e.from.resolve(inst), e.to.resolve(inst)) {
                (Ok(p), Ok(q)) => (p, q),
                (Err(d), _) | (_, Err(d)) => {
                    tally.record("value", Err(d));
                    return Ok(());
                }
            };
            tally.real("value", inst.distance(&p, &q)?, e.value.0, eps);
        }
        if let Some(e) = &self.nearest {
            let set = if e.set == "A" { &inst.a } else { &inst.b };
            let query = Location::At(e.query.iter().map(|r| r.0).collect());
            let (point, d) = inst.nearest_in_set(set, &query)?;
            let expected = PointRef::Coords(e.point.clone());
            tally.record("point", same_sequence(inst, &[point], &[expected], eps));
            tally.real("distance", d, e.distance.0, eps);
        }
        if let Some(e) = &self.analyze {
            let table = pair_table(inst, mapping)?;
            let a_ids = inst.finite(proxima_core::metric::Side::A)?;
            let points = |ids: &[usize]| -> Vec<Location> { ids.iter().map(|&id| Location::Point(id)).collect() };
            if let Some(g) = e.gap {
                tally.real("gap", table.gap, g.0, eps);
            }
            if let Some(a) = &e.a {
                tally.record("a", same_sequence(inst, &points(a_ids), a, eps));
            }
            if let Some(a0) = &e.a0 {
                tally.record("a0", same_set(inst, &points(&table.a0), a0, eps));
            }
            if let Some(all) = e.a0_is_a {
                tally.equal("a0_is_a", table.a0.len() == a_ids.len(), all);
            }
            if let Some(all) = e.full_core_covers_a {
                let lost: Vec<usize> = loaded
                    .boundary
                    .iter()
                    .filter_map(|n| match n {
                        BoundaryNote::CoreLost { point } => Some(*point),
                        _ => None,
                    })
                    .collect();
                let covered = a_ids.iter().all(|id| table.a0.contains(id) || lost.contains(id));
                tally.equal("full_core_covers_a", covered, all);
            }
            if let Some(b0) = &e.b0 {
                tally.record("b0", same_set(inst, &table.b0, b0, eps));
            }
            let pairs: Vec<(Location, Location)> =
                table.pairs.iter().map(|p| (Location::Point(p.u), Location::Point(p.x))).collect();
            if let Some(expected) = &e.pairs {
                tally.record("pairs", same_pairs(inst, &pairs, expected, false, eps));
            }
            if let Some(expected) = &e.pairs_include {
                tally.record("pairs_include", same_pairs(inst, &pairs, expected, true, eps));
            }
            if let Some(inc) = e.inclusion_holds {
                tally.equal("inclusion_holds", table.inclusion_holds, inc);
            }
            if let Some(images) = &e.images {
                let actual: Vec<(Location, Location)> =
                    table.images.iter().map(|(&x, y)| (Location::Point(x), y.clone())).collect();
                tally.record("images", same_pairs(inst, &actual, images, true, eps));
            }
        }
        if let Some(e) = &self.verify {
            let report = match e.kind {
                ContractionKind::TrianglePerimeter => verify_triangle_perimeter_selfmap(inst, mapping)?,
                kind => verify_with_table(inst, &pair_table(inst, mapping)?, kind)?,
            };
            let tol = e.tol.map_or(eps, |t| t.0);
            let status = match &report.status {
                VerificationStatus::Contraction { .. } => "contraction",
                VerificationStatus::NotContraction { .. } => "not-contraction",
                VerificationStatus::Vacuous { .. } => "vacuous",
            };
            tally.equal("status", status, e.status.as_str());
            if let Some(alpha) = e.alpha_min {
                match report.alpha_min() {
                    Some(a) => tally.real("alpha_min", a, alpha.0, tol),
                    None => tally.record("alpha_min", Err("no alpha_min reported".into())),
                }
            }
            if let Some(bound) = e.alpha_at_most {
                tally.record(
                    "alpha_at_most",
                    match report.alpha_min() {
                        Some(a) if a <= bound.0 + tol => Ok(()),
                        Some(a) => Err(format!("alpha_min {a} exceeds {}", bound.0)),
                        None => Err("no alpha_min reported".into()),
                    },
                );
            }
            if let Some(we) = &e.witness {
                let w = match &report.status {
                    VerificationStatus::Contraction { extremal, .. } => extremal.as_ref(),
                    VerificationStatus::NotContraction { witness, .. } => Some(witness),
                    VerificationStatus::Vacuous { .. } => None,
                };
                tally.record(
                    "witness",
                    w.map_or(Err("no witness reported".into()), |w| witness_matches(inst, w, we, tol)),
                );
            }
            if let Some(s) = e.sampled {
                tally.equal("sampled", report.sampled, s);
            }
        }
        if let Some(e) = &self.lambda {
            let lambda = check_condition_lambda(inst, &pair_table(inst, mapping)?)?;
            tally.equal("satisfied", lambda.is_satisfied(), e.satisfied);
            if let Some([ex, ey]) = &e.pair {
                let actual: Vec<(Location, Location)> = match lambda {
                    LambdaReport::Violated { x, y } => vec![(Location::Point(x), Location::Point(y))],
                    LambdaReport::Satisfied => vec![],
                };
                tally.record("pair", same_pairs(inst, &actual, &[[ex.clone(), ey.clone()]], false, eps));
            }
            if let Some(expected) = &e.period_two {
                let actual: Vec<(Location, Location)> = detect_period_two(inst, mapping)?
                    .into_iter()
                    .map(|(x, y)| (Location::Point(x), Location::Point(y)))
                    .collect();
                tally.record("period_two", same_pairs(inst, &actual, expected, false, eps));
            }
        }
        if let Some(e) = &self.solve {
            let trace = solve(loaded, &e.start, e.max_iter, e.tol)?;
            tally.equal("termination", trace.termination, e.termination);
            if let Some(seq) = &e.iterates {
                tally.record("iterates", same_sequence(inst, &trace.iterates, seq, eps));
            }
            if let Some(p) = &e.point {
                let within = e.within.map_or(eps, |w| w.0);
                tally.record(
                    "point",
                    match &trace.result {
                        Some(r) => same_sequence(inst, std::slice::from_ref(&r.point), std::slice::from_ref(p), within),
                        None => Err("no best proximity point reached".into()),
                    },
                );
            }
            if let Some(m) = e.max_iterations {
                tally.record(
                    "max_iterations",
                    if trace.iterations() <= m {
                        Ok(())
                    } else {
                        Err(format!("took {} iterations", trace.iterations()))
                    },
                );
            }
            if let Some(c) = e.start_in_core {
                tally.equal("start_in_core", trace.start_in_core, c);
            }
        }
        if let Some(e) = &self.decay {
            let trace = solve(loaded, &e.start, None, None)?;
            let report = perimeter_decay_check(&trace, e.alpha.0, eps)?;
            tally.equal("passed", report.passed, e.passed);
        }
        if let Some(e) = &self.diagnostics {
            let trace = solve(loaded, &e.start, None, None)?;
            tally.equal("events", trace.image_events.clone(), e.events.clone());
            if let Some(rate) = e.image_ratio {
                let tol = e.tol.map_or(eps, |t| t.0);
                let t = trace.image_perimeters.unwrap_or_default();
                let bad = t
                    .windows(2)
                    .filter(|w| w[0] > eps)
                    .map(|w| w[1] / w[0])
                    .find(|r| (r - rate.0).abs() > tol);
                tally.record(
                    "image_ratio",
                    match bad {
                        None if t.len() >= 2 => Ok(()),
                        None => Err("fewer than two image perimeters".into()),
                        Some(r) => Err(format!("ratio {r} differs from {}", rate.0)),
                    },
                );
            }
        }
        if let Some(e) = &self.enumerate {
            let result = enumerate_bpp(inst, mapping)?;
            tally.record("points", same_set(inst, &result.locations(), &e.points, eps));
            if let Some(ok) = e.count_bound_ok {
                tally.equal("count_bound_ok", result.count_bound_ok, ok);
            }
        }
        Ok(())
    }
}

/// Runs every check of one corpus entry.
pub fn run_entry(dir: &Path, name: &str) -> Result<CorpusOutcome, DocumentError> {
    let expect_path = dir.join(format!("{name}.expect.json"));
    let file: ExpectationFile = serde_json::from_str(&read_document(&expect_path)?)
        .map_err(|e| DocumentError::Parse(format!("{}: {e}", expect_path.display())))?;
    let instance_path = dir.join(&file.instance);
    let mut checks = Vec::new();
    for (i, check) in file.checks.iter().enumerate() {
        let op = check.operation().map_err(DocumentError::Schema)?;
        let mut tally = Tally {
            prefix: match check.truncate {
                Some(n) => format!("{i}:{op}@{n}"),
                None => format!("{i}:{op}"),
            },
            out: Vec::new(),
        };
        let opts = LoadOptions { epsilon: None, truncate: check.truncate };
        if let Some(e) = &check.validate {
            let report = validate_document(&read_document(&instance_path)?, opts)?;
            tally.equal("passed", report.passed(), e.passed);
            if let Some(d) = e.disjoint {
                tally.equal("disjoint", report.disjoint, Some(d));
            }
        } else {
            let loaded = load_instance(&instance_path, opts)?;
            if let Err(e) = check.evaluate(&loaded, &mut tally) {
                tally.record("run", Err(e.to_string()));
            }
        }
        checks.extend(tally.out);
    }
    Ok(CorpusOutcome { name: name.to_string(), passed: checks.iter().all(|c| c.passed), checks })
}
