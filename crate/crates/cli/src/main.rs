use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use proxima_cli::document::DocumentError;
use proxima_cli::golden::{corpus_dir, list_entries, run_entry};
use proxima_cli::report::{CorpusOutcome, Payload, RunReport};
use proxima_cli::{run_on_file, Command, LoadOptions, Outcome, SolveRequest, EXIT_INPUT, EXIT_NEGATIVE, EXIT_PASS};
use proxima_core::solver::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use proxima_core::{ContractionKind, SolveOptions};

/// Verify perimetric proximal contractions and compute best proximity points.
#[derive(Debug, Parser)]
#[command(name = "proxima", version)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,

    /// Override the instance's distance-equality tolerance.
    #[arg(long, global = true)]
    epsilon: Option<f64>,

    /// Truncate infinite sets to their first N elements (or sample a segment at N points).
    #[arg(long, value_name = "N", global = true)]
    truncate: Option<usize>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Proximal1,
    Proximal2,
    Perimetric1,
    Perimetric2,
    Triangle,
}

impl From<Kind> for ContractionKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Proximal1 => ContractionKind::ProximalFirst,
            Kind::Proximal2 => ContractionKind::ProximalSecond,
            Kind::Perimetric1 => ContractionKind::PerimetricFirst,
            Kind::Perimetric2 => ContractionKind::PerimetricSecond,
            Kind::Triangle => ContractionKind::TrianglePerimeter,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Check the metric axioms and the well-formedness of A, B and T.
    Validate { file: PathBuf },
    /// Gap, proximal cores, admissible pairs and the inclusion T(A0) in B0.
    Analyze { file: PathBuf },
    /// Decide one contraction condition and report the minimal constant or a counterexample.
    Verify {
        file: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
    },
    /// Check Condition Λ (and list period-2 points of self-maps).
    Lambda { file: PathBuf },
    /// Run the proximal Picard iteration.
    Solve {
        file: PathBuf,
        /// Start point: a label, a point id, or coordinates such as 1,1.
        #[arg(long, allow_hyphen_values = true)]
        start: String,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Also check the perimeter decay t_{n+1} <= alpha t_n.
        #[arg(long)]
        decay_alpha: Option<f64>,
    },
    /// List every best proximity point of a finite instance.
    Enumerate { file: PathBuf },
    /// Run the golden checks of the bundled corpus.
    Corpus {
        #[arg(long, conflicts_with = "name")]
        all: bool,
        #[arg(long)]
        name: Option<String>,
    },
}

/// An existing path, or the name of a corpus instance.
fn resolve_file(file: &Path) -> PathBuf {
    if file.exists() {
        return file.to_path_buf();
    }
    let bundled = corpus_dir().join(file).with_extension("json");
    if file.components().count() == 1 && bundled.exists() {
        bundled
    } else {
        file.to_path_buf()
    }
}

fn emit(report: &RunReport, text: &str, format: Format) {
    match format {
        Format::Text => print!("{text}"),
        Format::Json => println!("{}", report.to_json()),
    }
}

fn corpus(names: Option<String>, format: Format) -> Result<u8, DocumentError> {
    let dir = corpus_dir();
    let names = match names {
        Some(n) => vec![n],
        None => list_entries(&dir)?,
    };
    let outcomes: Vec<CorpusOutcome> = names.iter().map(|n| run_entry(&dir, n)).collect::<Result<_, _>>()?;
    let pass = outcomes.iter().all(|o| o.passed);
    let mut text = String::new();
    for o in &outcomes {
        let mark = if o.passed { "PASS" } else { "FAIL" };
        writeln!(text, "[{mark}] {} ({} assertions)", o.name, o.checks.len()).unwrap();
        for c in o.checks.iter().filter(|c| !c.passed) {
            writeln!(text, "    {}: {}", c.check, c.detail.as_deref().unwrap_or("failed")).unwrap();
        }
    }
    let instance_name = if names.len() == 1 { names[0].clone() } else { "all".into() };
    let report = RunReport { command: "corpus".into(), instance_name, payload: Payload::Corpus(outcomes), expected: None, pass: Some(pass) };
    emit(&report, &text, format);
    Ok(if pass { EXIT_PASS } else { EXIT_NEGATIVE })
}

fn run(cli: Cli) -> Result<u8, DocumentError> {
    let opts = LoadOptions { epsilon: cli.epsilon, truncate: cli.truncate };
    let (file, cmd) = match cli.command {
        Cmd::Corpus { all: _, name } => return corpus(name, cli.format),
        Cmd::Validate { file } => (file, Command::Validate),
        Cmd::Analyze { file } => (file, Command::Analyze),
        Cmd::Verify { file, kind } => (file, Command::Verify(kind.into())),
        Cmd::Lambda { file } => (file, Command::Lambda),
        Cmd::Solve { file, start, max_iter, tol, decay_alpha } => {
            (file, Command::Solve(SolveRequest { start, options: SolveOptions { max_iter, tol }, decay_alpha }))
        }
        Cmd::Enumerate { file } => (file, Command::Enumerate),
    };
    let Outcome { report, text, exit } = run_on_file(&resolve_file(&file), &cmd, opts)?;
    emit(&report, &text, cli.format);
    Ok(exit)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            if let DocumentError::Invalid(report) = &e {
                for c in report.failures() {
                    eprintln!("  {}: {}", c.name, c.detail.as_deref().unwrap_or("failed"));
                }
            }
            ExitCode::from(EXIT_INPUT)
        }
    }
}
