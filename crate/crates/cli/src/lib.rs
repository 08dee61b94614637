//! Config-driven batch driver: parses a run configuration, evaluates operators,
//! runs checks and writes reports, CSV summaries and grid-function binaries.

pub mod config;
pub mod error;
pub mod plan;
pub mod run;

pub use config::RunConfig;
pub use error::{exit, CliError};
pub use run::{run, RunOptions, RunOutcome};
