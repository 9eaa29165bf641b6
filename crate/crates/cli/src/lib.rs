//! Command-line front end for `qgame-core`.

pub mod commands;
pub mod document;
pub mod report;

use thiserror::Error;

pub use commands::{execute, Cli, Outcome};

/// Exit status for a successful run or an expected profile.
pub const EXIT_OK: u8 = 0;
pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
/// A stage or audit did not come out as expected.
pub const EXIT_MISMATCH: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<qgame_core::Error> for CliError {
    fn from(e: qgame_core::Error) -> Self {
        use qgame_core::Error::*;
        match e {
            InvalidParams(_) | OutOfRange { .. } | UnknownStage(_) | UnknownAxiom(_) | EmptyCorpus | DimTooSmall(_) => {
                CliError::Input(e.to_string())
            }
            other => CliError::Internal(other.to_string()),
        }
    }
}
