//! Command dispatch shared by the binary and the tests.

use std::fmt::Write as _;
use std::path::Path;

use proxima_core::proximity::{pair_table, BoundaryNote};
use proxima_core::solver::{image_trace_diagnostics, perimeter_decay_check};
use proxima_core::verify::{verify_triangle_perimeter_selfmap, verify_with_table, VerificationStatus, Witness};
use proxima_core::{
    check_condition_lambda, detect_period_two, enumerate_bpp, iterate_bpp, ContractionKind, LambdaReport, Location,
    MetricInstance, PointId, SolveOptions, Termination, ValidationReport, VerificationReport,
};

use crate::document::{load_instance, parse_real, read_document, validate_document, DocumentError, LoadOptions, LoadedInstance};
use crate::report::{Analysis, LambdaOutcome, Payload, RunReport, SolveOutcome};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_NEGATIVE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Validate,
    Analyze,
    Verify(ContractionKind),
    Lambda,
    Solve(SolveRequest),
    Enumerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveRequest {
    /// A point label, a registry id, or comma-separated coordinates.
    pub start: String,
    pub options: SolveOptions,
    /// Also run the perimeter decay check at this rate.
    pub decay_alpha: Option<f64>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Analyze => "analyze",
            Command::Verify(_) => "verify",
            Command::Lambda => "lambda",
            Command::Solve(_) => "solve",
            Command::Enumerate => "enumerate",
        }
    }
}

/// A finished command: the machine payload, its text rendering and the exit code.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: RunReport,
    pub text: String,
    pub exit: u8,
}

/// Loads `path` and runs `cmd` on it.
pub fn run_on_file(path: &Path, cmd: &Command, opts: LoadOptions) -> Result<Outcome, DocumentError> {
    if *cmd == Command::Validate {
        let text = read_document(path)?;
        let report = validate_document(&text, opts)?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        return Ok(validation_outcome(&name, report));
    }
    let loaded = load_instance(path, opts)?;
    Ok(run_on_instance(&loaded, cmd)?)
}

fn validation_outcome(name: &str, report: ValidationReport) -> Outcome {
    let mut text = format!("instance: {name}\n");
    for c in &report.checks {
        let mark = if c.passed { "ok  " } else { "FAIL" };
        match &c.detail {
            Some(d) => writeln!(text, "  [{mark}] {}: {d}", c.name),
            None => writeln!(text, "  [{mark}] {}", c.name),
        }
        .unwrap();
    }
    match report.disjoint {
        Some(d) => writeln!(text, "A and B disjoint: {}", yes_no(d)).unwrap(),
        None => writeln!(text, "A and B disjoint: undecided").unwrap(),
    }
    let passed = report.passed();
    writeln!(text, "result: {}", if passed { "valid" } else { "invalid" }).unwrap();
    Outcome {
        report: RunReport {
            command: "validate".into(),
            instance_name: name.to_string(),
            payload: Payload::Validation(report),
            expected: None,
            pass: Some(passed),
        },
        text,
        exit: if passed { EXIT_PASS } else { EXIT_INPUT },
    }
}

/// Runs `cmd` on an instance that is already loaded and validated.
pub fn run_on_instance(loaded: &LoadedInstance, cmd: &Command) -> proxima_core::Result<Outcome> {
    let inst = &loaded.instance;
    let mapping = &loaded.mapping;
    let mut text = header(loaded);
    let (payload, exit) = match cmd {
        Command::Validate => return Ok(validation_outcome(&loaded.name, loaded.validation.clone())),
        Command::Analyze => {
            let table = pair_table(inst, mapping)?;
            render_analysis(&mut text, inst, &table, &loaded.boundary);
            (Payload::Analysis(Analysis { table, boundary: loaded.boundary.clone() }), EXIT_PASS)
        }
        Command::Verify(kind) => {
            let report = match kind {
                ContractionKind::TrianglePerimeter => verify_triangle_perimeter_selfmap(inst, mapping)?,
                _ => verify_with_table(inst, &pair_table(inst, mapping)?, *kind)?,
            };
            render_verification(&mut text, inst, &report);
            let exit = if matches!(report.status, VerificationStatus::NotContraction { .. }) {
                EXIT_NEGATIVE
            } else {
                EXIT_PASS
            };
            (Payload::Verification(report), exit)
        }
        Command::Lambda => {
            let lambda = check_condition_lambda(inst, &pair_table(inst, mapping)?)?;
            let period_two = if inst.self_map { Some(detect_period_two(inst, mapping)?) } else { None };
            match &lambda {
                LambdaReport::Satisfied => writeln!(text, "condition Λ: satisfied"),
                LambdaReport::Violated { x, y } => writeln!(
                    text,
                    "condition Λ: violated by x = {}, y = {} (d(x, Ty) = d(y, Tx) = d(A,B))",
                    name(inst, *x),
                    name(inst, *y)
                ),
            }
            .unwrap();
            if let Some(cycles) = &period_two {
                let list: Vec<String> = cycles.iter().map(|&(x, y)| format!("({}, {})", name(inst, x), name(inst, y))).collect();
                writeln!(text, "period-2 points: {}", braces(&list)).unwrap();
            }
            let exit = if lambda.is_satisfied() { EXIT_PASS } else { EXIT_NEGATIVE };
            (Payload::Lambda(LambdaOutcome { lambda, period_two }), exit)
        }
        Command::Solve(req) => {
            let start = parse_start(inst, &req.start)?;
            let trace = iterate_bpp(inst, mapping, &start, req.options)?;
            let trace = image_trace_diagnostics(inst, mapping, &trace)?;
            let decay = match req.decay_alpha {
                Some(alpha) => Some(perimeter_decay_check(&trace, alpha, inst.epsilon)?),
                None => None,
            };
            render_solve(&mut text, inst, &trace);
            if let Some(d) = &decay {
                writeln!(text, "perimeter decay at alpha = {}: {}", d.alpha, if d.passed { "pass" } else { "fail" }).unwrap();
            }
            let converged = matches!(trace.termination, Termination::ConvergedFixed | Termination::ConvergedCauchy);
            let exit = if converged && decay.as_ref().is_none_or(|d| d.passed) { EXIT_PASS } else { EXIT_NEGATIVE };
            (Payload::Solve(SolveOutcome { trace, decay }), exit)
        }
        Command::Enumerate => {
            let result = enumerate_bpp(inst, mapping)?;
            let list: Vec<String> = result.points.iter().map(|p| inst.describe(&p.point)).collect();
            writeln!(text, "best proximity points: {}", braces(&list)).unwrap();
            writeln!(text, "at most two: {}", yes_no(result.count_bound_ok)).unwrap();
            (Payload::Enumeration(result), EXIT_PASS)
        }
    };
    Ok(Outcome {
        report: RunReport {
            command: cmd.name().into(),
            instance_name: loaded.name.clone(),
            payload,
            expected: None,
            pass: None,
        },
        text,
        exit,
    })
}

/// Resolves a start point: a label, then a registry id, then coordinates.
pub fn parse_start(inst: &MetricInstance, s: &str) -> proxima_core::Result<Location> {
    let s = s.trim();
    if let Some(p) = inst.points.iter().find(|p| p.label.as_deref() == Some(s)) {
        return Ok(Location::Point(p.id));
    }
    if let Ok(id) = s.parse::<PointId>() {
        if id < inst.points.len() {
            return Ok(Location::Point(id));
        }
    }
    let coords = s
        .split(',')
        .map(parse_real)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| proxima_core::Error::InvalidArgument(format!("start {s:?}: {e}")))?;
    Ok(Location::At(coords))
}

fn header(loaded: &LoadedInstance) -> String {
    let mut text = format!("instance: {}", loaded.name);
    if let Some(n) = loaded.truncated {
        write!(text, " (truncated to n_max = {n})").unwrap();
    } else if loaded.instance.sampled {
        text.push_str(" (sampled)");
    }
    text.push('\n');
    text
}

fn name(inst: &MetricInstance, id: PointId) -> String {
    inst.describe(&Location::Point(id))
}

fn braces(items: &[String]) -> String {
    format!("{{{}}}", items.join(", "))
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn tuple(inst: &MetricInstance, ids: &[PointId]) -> String {
    let names: Vec<String> = ids.iter().map(|&id| name(inst, id)).collect();
    format!("({})", names.join(", "))
}

fn render_analysis(text: &mut String, inst: &MetricInstance, table: &proxima_core::ProximalPairTable, boundary: &[BoundaryNote]) {
    writeln!(text, "gap d(A,B) = {}", table.gap).unwrap();
    let a0: Vec<String> = table.a0.iter().map(|&id| name(inst, id)).collect();
    let b0: Vec<String> = table.b0.iter().map(|l| inst.describe(l)).collect();
    writeln!(text, "A0 = {}", braces(&a0)).unwrap();
    writeln!(text, "B0 = {}", braces(&b0)).unwrap();
    let images: Vec<String> = table.images.iter().map(|(&x, y)| format!("{} -> {}", name(inst, x), inst.describe(y))).collect();
    writeln!(text, "T: {}", images.join(", ")).unwrap();
    let pairs: Vec<String> = table.pairs.iter().map(|p| format!("({}, {})", name(inst, p.u), name(inst, p.x))).collect();
    writeln!(text, "admissible pairs (u, x): {}", braces(&pairs)).unwrap();
    if table.inclusion_holds {
        writeln!(text, "T(A0) in B0: yes").unwrap();
    } else {
        let bad: Vec<String> = table.inclusion_failures.iter().map(|&id| name(inst, id)).collect();
        writeln!(text, "T(A0) in B0: no, fails at {}", braces(&bad)).unwrap();
    }
    for note in boundary {
        let line = match note {
            BoundaryNote::CoreLost { point } => format!("{} is in A0 of the full instance only", name(inst, *point)),
            BoundaryNote::ImageOutside { x } => format!("T({}) lies beyond the retained part of B", name(inst, *x)),
            BoundaryNote::PartnerOutside { x, partner } => {
                format!("T({}) pairs with {} which was not retained", name(inst, *x), inst.describe(partner))
            }
        };
        writeln!(text, "boundary: {line}").unwrap();
    }
}

fn render_witness(text: &mut String, inst: &MetricInstance, label: &str, w: &Witness) {
    writeln!(
        text,
        "{label}: us = {}, xs = {}, lhs = {}, rhs = {}",
        tuple(inst, &w.us),
        tuple(inst, &w.xs),
        w.lhs,
        w.rhs
    )
    .unwrap();
}

fn render_verification(text: &mut String, inst: &MetricInstance, report: &VerificationReport) {
    let sampled = if report.sampled { " (sampled)" } else { "" };
    match &report.status {
        VerificationStatus::Contraction { alpha_min, extremal } => {
            writeln!(text, "{}: contraction, alpha_min = {alpha_min}{sampled}", report.kind).unwrap();
            if let Some(w) = extremal {
                render_witness(text, inst, "extremal witness", w);
            }
        }
        VerificationStatus::NotContraction { witness, sup_ratio } => {
            writeln!(text, "{}: not a contraction{sampled}", report.kind).unwrap();
            render_witness(text, inst, "counterexample", witness);
            if let Some(r) = sup_ratio {
                writeln!(text, "largest ratio: {r}").unwrap();
            }
        }
        VerificationStatus::Vacuous { reason } => {
            writeln!(text, "{}: vacuously satisfied ({reason}){sampled}", report.kind).unwrap();
        }
    }
    writeln!(text, "configurations checked: {}", report.triples_checked).unwrap();
}

fn render_solve(text: &mut String, inst: &MetricInstance, trace: &proxima_core::SolverTrace) {
    writeln!(text, "gap d(A,B) = {}", trace.gap).unwrap();
    if !trace.start_in_core {
        writeln!(text, "note: the start point is not in A0").unwrap();
    }
    for (n, u) in trace.iterates.iter().enumerate() {
        write!(text, "u{n} = {}", inst.describe(u)).unwrap();
        if let Some(step) = trace.step_lengths.get(n) {
            write!(text, "   d(u{n}, u{}) = {step}", n + 1).unwrap();
        }
        text.push('\n');
    }
    let t: Vec<String> = trace.perimeters.iter().map(|p| p.to_string()).collect();
    writeln!(text, "perimeters t_n: [{}]", t.join(", ")).unwrap();
    for e in &trace.image_events {
        writeln!(text, "image event: {e:?}").unwrap();
    }
    writeln!(text, "termination: {:?}", trace.termination).unwrap();
    if let Some(r) = &trace.result {
        writeln!(text, "best proximity point: {} (residual {:e})", inst.describe(&r.point), r.residual).unwrap();
    }
}
