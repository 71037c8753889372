//! Machine-readable command results.

use proxima_core::proximity::{BoundaryNote, ProximalPairTable};
use proxima_core::solver::DecayReport;
use proxima_core::{BppResult, LambdaReport, PointId, SolverTrace, ValidationReport, VerificationReport};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub instance_name: String,
    pub payload: Payload,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "data", rename_all = "kebab-case")]
pub enum Payload {
    Validation(ValidationReport),
    Analysis(Analysis),
    Verification(VerificationReport),
    Lambda(LambdaOutcome),
    Solve(SolveOutcome),
    Enumeration(BppResult),
    Corpus(Vec<CorpusOutcome>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub table: ProximalPairTable,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boundary: Vec<BoundaryNote>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaOutcome {
    pub lambda: LambdaReport,
    /// Two-cycles of T, for self-maps only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_two: Option<Vec<(PointId, PointId)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub trace: SolverTrace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecayReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusOutcome {
    pub name: String,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only finite numbers")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
