//! Harness around the simulator core: suite files, trajectory writers, the
//! invariant audit, and summaries. The `moneta` binary is a thin layer over
//! this library so everything here is testable in-process.

pub mod suite;
pub mod summarize;
pub mod verify;
pub mod writer;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or invalid configuration; exit status 2.
    #[error("{0}")]
    Config(String),
    /// A hard assertion failed during verification; exit status 1.
    #[error("{0}")]
    Verification(String),
    /// Runtime failure (I/O and friends); exit status 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Verification(_) | CliError::Runtime(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<suite::SuiteError> for CliError {
    fn from(e: suite::SuiteError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<moneta_core::engine::EngineError> for CliError {
    fn from(e: moneta_core::engine::EngineError) -> Self {
        CliError::Config(e.to_string())
    }
}
