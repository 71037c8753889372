//! Best proximity points of perimetric proximal contractions.
//!
//! Two-set metric instances `(A, B)` with a mapping `T: A -> B`, exhaustive
//! verifiers for the proximal and perimetric contraction conditions and for
//! Condition Λ, the proximal Picard iteration, and a brute-force enumerator
//! of best proximity points.


pub mod error;
pub mod metric;
pub mod proximity;

pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use metric::{validate_instance, Location, MetricInstance, PointId, Space, SpaceSet, ValidationReport};
pub use proximity::{gap_distance, pair_table, proximal_core, truncate_instance, MappingSpec, ProximalPairTable};
pub use solver::{enumerate_bpp, iterate_bpp, BppResult, SolveOptions, SolverTrace, Termination};
pub use verify::{check_condition_lambda, detect_period_two, verify, ContractionKind, LambdaReport, VerificationReport};
