//! Config-driven experiment runner over `nclab-core`.
//!
//! A config names experiments by `kind`; each run produces a residual table with a
//! threshold per entry. Exit codes: 0 when every check passes, 1 when a check
//! fails, 2 for an invalid config, 3 when the report cannot be written.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{parse_config, ExperimentConfig, Kind, OperatorSpec, RunConfig};
pub use report::{emit_report, render, ExperimentReport, Format, Residual, RunReport};
pub use runner::{run_all, run_experiment, RunOptions, DEFAULT_MAX_DIM};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid config: {0}")]
    Schema(String),
    #[error(transparent)]
    Lab(#[from] nclab_core::LabError),
    #[error("cannot write report: {0}")]
    Output(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Schema(_) | RunError::Lab(_) => 2,
            RunError::Output(_) => 3,
        }
    }
}
