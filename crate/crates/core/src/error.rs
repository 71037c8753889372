use thiserror::Error;

use crate::metric::{PointId, SetKind};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} coordinates, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point id {0} is out of range")]
    PointOutOfRange(PointId),

    #[error("distance-matrix spaces only address registry points, not coordinates")]
    NoCoordinates,

    #[error("set {0} is empty")]
    EmptySet(&'static str),

    #[error("unsupported set-kind combination: {0} and {1}")]
    UnsupportedCombination(SetKind, SetKind),

    #[error("set {0} is not finite; truncate or sample it first")]
    NotFinite(&'static str),

    #[error("a {0} set cannot be truncated")]
    NotTruncatable(SetKind),

    #[error("truncation keeps at least 3 elements, got n_max = {0}")]
    TruncationTooSmall(usize),

    #[error("mapping is undefined at {0}")]
    MappingUndefined(String),

    #[error("{0} is not an element of {1}")]
    NotInSet(String, &'static str),

    #[error("operation requires a self-map instance (A = B)")]
    NotSelfMap,

    #[error("need at least {need} points, found {found}")]
    TooFewPoints { need: usize, found: usize },

    #[error("trace has {len} iterates, need at least {need}")]
    TraceTooShort { len: usize, need: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
