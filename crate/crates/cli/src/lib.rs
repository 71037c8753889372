//! Instance files, run reports, the bundled example corpus and the command
//! implementations behind the `proxima` binary.

pub mod commands;
pub mod document;
pub mod golden;
pub mod report;

pub use commands::{run_on_file, run_on_instance, Command, Outcome, SolveRequest, EXIT_INPUT, EXIT_NEGATIVE, EXIT_PASS};
pub use document::{load_instance, parse_instance, DocumentError, InstanceDocument, LoadOptions, LoadedInstance};
pub use report::{Payload, RunReport};
