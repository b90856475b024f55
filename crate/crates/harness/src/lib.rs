//! Experiment harness: config-driven runs, sweeps, aggregation with
//! bootstrap confidence intervals, and the verification suite.

pub mod aggregate;
pub mod config;
pub mod output;
pub mod run;
pub mod sweep;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] moc_core::Error),
    #[error("io error: {0}")]
    Io(String),
    #[error("output directory {0} already exists (use --force to overwrite)")]
    OutputExists(String),
    #[error("aggregation error: {0}")]
    Aggregate(String),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
