//! Strict, versioned JSON instance files.
//!
//! Reals may be written as JSON numbers or as strings; strings accept
//! decimal notation (`"1.5"`, `"1e-9"`) and exact fractions (`"3/2"`).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use proxima_core::metric::{validate_instance, Interval, Point, SpaceSet};
use proxima_core::proximity::{truncate_instance, validate_mapping, BoundaryNote, Condition, Piece};
use proxima_core::{Location, MappingSpec, MetricInstance, Space, ValidationReport};
use serde::Deserialize;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("instance failed validation: {}", failed_names(.0))]
    Invalid(ValidationReport),

    #[error(transparent)]
    Core(#[from] proxima_core::Error),
}

fn failed_names(report: &ValidationReport) -> String {
    report.failures().map(|c| c.name.as_str()).collect::<Vec<_>>().join(", ")
}

/// A real number written as a JSON number or a string.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(try_from = "RealRepr")]
pub struct Real(pub f64);

#[derive(Deserialize)]
#[serde(untagged)]
enum RealRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<RealRepr> for Real {
    type Error = String;

    fn try_from(repr: RealRepr) -> Result<Self, String> {
        match repr {
            RealRepr::Number(x) => Ok(Real(x)),
            RealRepr::Text(s) => parse_real(&s).map(Real),
        }
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Parses `"1.5"`, `"-3"`, `"1e-9"` or `"p/q"`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
            let q: f64 = q.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
            if q == 0.0 {
                return Err(format!("zero denominator in {s:?}"));
            }
            p / q
        }
        None => s.parse().map_err(|_| format!("not a real number: {s:?}"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("not a finite real: {s:?}"))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub schema_version: u32,
    #[serde(default)]
    pub meta: Meta,
    pub space: SpaceDoc,
    #[serde(default)]
    pub points: Vec<PointDoc>,
    pub sets: SetsDoc,
    #[serde(default)]
    pub self_map: bool,
    pub mapping: MappingDoc,
    #[serde(default)]
    pub epsilon: Option<Real>,
    #[serde(default)]
    pub truncation: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub notes: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum SpaceDoc {
    #[serde(rename = "euclidean-1d")]
    Euclidean1d,
    #[serde(rename = "euclidean-2d")]
    Euclidean2d,
    #[serde(rename = "distance-matrix")]
    DistanceMatrix { matrix: Vec<Vec<Real>> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointDoc {
    pub id: usize,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub coords: Option<Vec<Real>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetsDoc {
    #[serde(rename = "A")]
    pub a: SetDoc,
    /// Absent for self-maps.
    #[serde(rename = "B", default)]
    pub b: Option<SetDoc>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SetDoc {
    FinitePointList { members: Vec<usize> },
    #[serde(rename = "interval-union-1d")]
    IntervalUnion1d { intervals: Vec<[Real; 2]> },
    #[serde(rename = "segment-2d")]
    Segment2d { from: [Real; 2], to: [Real; 2] },
    ArithmeticProgression { start: Real, step: Real },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LocationDoc {
    Point(usize),
    At(Vec<Real>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ConditionDoc {
    Any,
    Eq(Real),
    Lt(Real),
    Le(Real),
    Gt(Real),
    Ge(Real),
    Between([Real; 2]),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MappingDoc {
    /// Keys are point ids written as strings.
    Table { entries: BTreeMap<String, LocationDoc> },
    /// Ordered `[condition, a, b]` records meaning `x -> a x + b`.
    #[serde(rename = "piecewise-affine-1d")]
    PiecewiseAffine1d { pieces: Vec<(ConditionDoc, Real, Real)> },
    #[serde(rename = "affine-2d")]
    Affine2d { matrix: [[Real; 2]; 2], offset: [Real; 2] },
}

impl InstanceDocument {
    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        let doc: InstanceDocument = serde_json::from_str(text).map_err(|e| DocumentError::Parse(e.to_string()))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(DocumentError::Schema(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                doc.schema_version
            )));
        }
        Ok(doc)
    }

    /// The instance and mapping as written, before validation and truncation.
    pub fn build(&self) -> Result<(MetricInstance, MappingSpec), DocumentError> {
        let space = match &self.space {
            SpaceDoc::Euclidean1d => Space::Euclidean1d,
            SpaceDoc::Euclidean2d => Space::Euclidean2d,
            SpaceDoc::DistanceMatrix { matrix } => {
                Space::DistanceMatrix(matrix.iter().map(|row| row.iter().map(|r| r.0).collect()).collect())
            }
        };
        let points = self
            .points
            .iter()
            .map(|p| Point {
                id: p.id,
                coords: p.coords.as_ref().map(|c| c.iter().map(|r| r.0).collect()),
                label: p.label.clone(),
            })
            .collect();
        let a = set_from_doc(&self.sets.a);
        let mut inst = match (&self.sets.b, self.self_map) {
            (None, true) => MetricInstance::self_map(space, points, a),
            (Some(b), false) => MetricInstance::new(space, points, a, set_from_doc(b)),
            (Some(_), true) => return Err(DocumentError::Schema("self-map instances declare only sets.A".into())),
            (None, false) => return Err(DocumentError::Schema("sets.B is required unless self_map is true".into())),
        };
        if let Some(eps) = self.epsilon {
            inst.epsilon = eps.0;
        }
        Ok((inst, mapping_from_doc(&self.mapping)?))
    }
}

fn set_from_doc(doc: &SetDoc) -> SpaceSet {
    match doc {
        SetDoc::FinitePointList { members } => SpaceSet::Finite(members.clone()),
        SetDoc::IntervalUnion1d { intervals } => {
            SpaceSet::IntervalUnion(intervals.iter().map(|[lo, hi]| Interval::new(lo.0, hi.0)).collect())
        }
        SetDoc::Segment2d { from, to } => SpaceSet::Segment { from: [from[0].0, from[1].0], to: [to[0].0, to[1].0] },
        SetDoc::ArithmeticProgression { start, step } => SpaceSet::Progression { start: start.0, step: step.0 },
    }
}

fn location_from_doc(doc: &LocationDoc) -> Location {
    match doc {
        LocationDoc::Point(id) => Location::Point(*id),
        LocationDoc::At(c) => Location::At(c.iter().map(|r| r.0).collect()),
    }
}

fn mapping_from_doc(doc: &MappingDoc) -> Result<MappingSpec, DocumentError> {
    Ok(match doc {
        MappingDoc::Table { entries } => {
            let mut table = BTreeMap::new();
            for (key, loc) in entries {
                let id: usize = key
                    .parse()
                    .map_err(|_| DocumentError::Schema(format!("mapping key {key:?} is not a point id")))?;
                table.insert(id, location_from_doc(loc));
            }
            MappingSpec::Table(table)
        }
        MappingDoc::PiecewiseAffine1d { pieces } => MappingSpec::PiecewiseAffine1d(
            pieces
                .iter()
                .map(|(when, a, b)| Piece {
                    when: match when {
                        ConditionDoc::Any => Condition::Any,
                        ConditionDoc::Eq(v) => Condition::Eq(v.0),
                        ConditionDoc::Lt(v) => Condition::Lt(v.0),
                        ConditionDoc::Le(v) => Condition::Le(v.0),
                        ConditionDoc::Gt(v) => Condition::Gt(v.0),
                        ConditionDoc::Ge(v) => Condition::Ge(v.0),
                        ConditionDoc::Between([lo, hi]) => Condition::Between(lo.0, hi.0),
                    },
                    slope: a.0,
                    intercept: b.0,
                })
                .collect(),
        ),
        MappingDoc::Affine2d { matrix, offset } => MappingSpec::Affine2d {
            matrix: [[matrix[0][0].0, matrix[0][1].0], [matrix[1][0].0, matrix[1][1].0]],
            offset: [offset[0].0, offset[1].0],
        },
    })
}

/// Overrides applied at load time.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LoadOptions {
    pub epsilon: Option<f64>,
    /// Replaces the truncation declared in the file.
    pub truncate: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct LoadedInstance {
    pub name: String,
    pub instance: MetricInstance,
    pub mapping: MappingSpec,
    /// Empty unless a truncation was applied.
    pub boundary: Vec<BoundaryNote>,
    /// `n_max` of the truncation, if one was applied.
    pub truncated: Option<usize>,
    pub validation: ValidationReport,
}

type Checked = (InstanceDocument, MetricInstance, MappingSpec, ValidationReport);

fn checked(text: &str, opts: LoadOptions) -> Result<Checked, DocumentError> {
    let doc = InstanceDocument::from_json(text)?;
    let (mut instance, mapping) = doc.build()?;
    if let Some(eps) = opts.epsilon {
        instance.epsilon = eps;
    }
    let mut validation = validate_instance(&instance);
    if validation.passed() {
        validation.merge(validate_mapping(&instance, &mapping));
    }
    Ok((doc, instance, mapping, validation))
}

/// The full validation report of a parseable document, passing or not.
pub fn validate_document(text: &str, opts: LoadOptions) -> Result<ValidationReport, DocumentError> {
    Ok(checked(text, opts)?.3)
}

pub fn read_document(path: &Path) -> Result<String, DocumentError> {
    std::fs::read_to_string(path).map_err(|e| DocumentError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Parses, validates and, if requested, truncates an instance.
pub fn parse_instance(text: &str, fallback_name: &str, opts: LoadOptions) -> Result<LoadedInstance, DocumentError> {
    let (doc, instance, mapping, validation) = checked(text, opts)?;
    if !validation.passed() {
        return Err(DocumentError::Invalid(validation));
    }
    let name = doc.meta.name.clone().unwrap_or_else(|| fallback_name.to_string());
    let n_max = opts.truncate.or(doc.truncation);
    let (instance, mapping, boundary) = match n_max {
        Some(n) => {
            let cut = truncate_instance(&instance, &mapping, n)?;
            (cut.instance, cut.mapping, cut.boundary)
        }
        None => (instance, mapping, Vec::new()),
    };
    Ok(LoadedInstance { name, instance, mapping, boundary, truncated: n_max, validation })
}

pub fn load_instance(path: &Path, opts: LoadOptions) -> Result<LoadedInstance, DocumentError> {
    let text = read_document(path)?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_instance(&text, &stem, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIRST: &str = r#"{
        "schema_version": 1,
        "meta": {"name": "first"},
        "space": {"kind": "euclidean-1d"},
        "points": [
            {"id": 0, "coords": ["-3"]}, {"id": 1, "coords": ["0"]},
            {"id": 2, "coords": ["3"]}, {"id": 3, "coords": ["4"]}
        ],
        "sets": {
            "A": {"kind": "finite-point-list", "members": [0, 1, 2, 3]},
            "B": {"kind": "interval-union-1d", "intervals": [["-2", "-1"], ["1", "2"]]}
        },
        "mapping": {"kind": "table", "entries": {
            "0": {"at": ["-2"]}, "1": {"at": ["3/2"]}, "2": {"at": [2]}, "3": {"at": ["1"]}
        }}
    }"#;

    #[test]
    fn reals_accept_numbers_decimals_and_fractions() {
        assert_eq!(parse_real("1.5"), Ok(1.5));
        assert_eq!(parse_real("6/7"), Ok(6.0 / 7.0));
        assert_eq!(parse_real(" -3 "), Ok(-3.0));
        assert_eq!(parse_real("1e-9"), Ok(1e-9));
        assert!(parse_real("1/0").is_err());
        assert!(parse_real("abc").is_err());
        assert!(parse_real("inf").is_err());
    }

    #[test]
    fn first_instance_loads() {
        let loaded = parse_instance(FIRST, "x", LoadOptions::default()).unwrap();
        assert_eq!(loaded.name, "first");
        assert_eq!(loaded.instance.a, SpaceSet::Finite(vec![0, 1, 2, 3]));
        assert_eq!(loaded.instance.b, SpaceSet::IntervalUnion(vec![Interval::new(-2.0, -1.0), Interval::new(1.0, 2.0)]));
        let t = &loaded.mapping;
        assert_eq!(t.apply(&loaded.instance, &Location::Point(0)).unwrap(), Location::at1(-2.0));
        assert_eq!(t.apply(&loaded.instance, &Location::Point(1)).unwrap(), Location::at1(1.5));
        assert_eq!(loaded.validation.disjoint, Some(true));
    }

    #[test]
    fn unknown_field_is_a_parse_error() {
        let text = FIRST.replacen("\"schema_version\": 1,", "\"schema_version\": 1, \"alpha_hint\": 0.5,", 1);
        assert!(matches!(parse_instance(&text, "x", LoadOptions::default()), Err(DocumentError::Parse(_))));
    }

    #[test]
    fn unknown_nested_field_is_a_parse_error() {
        let text = FIRST.replacen("\"members\": [0, 1, 2, 3]", "\"members\": [0, 1, 2, 3], \"closed\": true", 1);
        assert!(matches!(parse_instance(&text, "x", LoadOptions::default()), Err(DocumentError::Parse(_))));
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let text = FIRST.replacen("\"schema_version\": 1", "\"schema_version\": 2", 1);
        assert!(matches!(parse_instance(&text, "x", LoadOptions::default()), Err(DocumentError::Schema(_))));
    }

    #[test]
    fn asymmetric_matrix_fails_validation() {
        let text = r#"{
            "schema_version": 1,
            "space": {"kind": "distance-matrix", "matrix": [[0, 1, 2], [1, 0, 1], [2, 3, 0]]},
            "points": [{"id": 0}, {"id": 1}, {"id": 2}],
            "sets": {
                "A": {"kind": "finite-point-list", "members": [0]},
                "B": {"kind": "finite-point-list", "members": [1, 2]}
            },
            "mapping": {"kind": "table", "entries": {"0": {"point": 1}}}
        }"#;
        match parse_instance(text, "x", LoadOptions::default()) {
            Err(DocumentError::Invalid(report)) => assert!(!report.check("symmetry").unwrap().passed),
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn mapping_outside_b_fails_validation() {
        let text = FIRST.replacen("\"3\": {\"at\": [\"1\"]}", "\"3\": {\"at\": [\"5\"]}", 1);
        match parse_instance(&text, "x", LoadOptions::default()) {
            Err(DocumentError::Invalid(report)) => assert!(!report.check("mapping-into-B").unwrap().passed),
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn self_map_rejects_second_set() {
        let text = FIRST.replacen("\"mapping\"", "\"self_map\": true, \"mapping\"", 1);
        assert!(matches!(parse_instance(&text, "x", LoadOptions::default()), Err(DocumentError::Schema(_))));
    }

    #[test]
    fn epsilon_override_wins() {
        let opts = LoadOptions { epsilon: Some(1e-6), truncate: None };
        assert_eq!(parse_instance(FIRST, "x", opts).unwrap().instance.epsilon, 1e-6);
    }

    #[test]
    fn piecewise_pieces_are_ordered_records() {
        let text = r#"{
            "schema_version": 1,
            "space": {"kind": "euclidean-1d"},
            "sets": {
                "A": {"kind": "arithmetic-progression", "start": 7, "step": 4},
                "B": {"kind": "arithmetic-progression", "start": 2, "step": 2}
            },
            "mapping": {"kind": "piecewise-affine-1d", "pieces": [
                [{"eq": 7}, 0, 6], [{"eq": 11}, 0, 12], [{"ge": 15}, "1/2", "-3/2"]
            ]},
            "truncation": 10
        }"#;
        let loaded = parse_instance(text, "ex2", LoadOptions::default()).unwrap();
        assert_eq!(loaded.truncated, Some(10));
        let a = loaded.instance.a.members().unwrap();
        assert_eq!(a.len(), 10);
        let last = Location::Point(a[9]);
        assert_eq!(loaded.instance.coords(&last).unwrap(), &[43.0]);
        assert_eq!(loaded.mapping.apply(&loaded.instance, &last).unwrap(), Location::at1(20.0));
        assert_eq!(loaded.name, "ex2");
    }
}
