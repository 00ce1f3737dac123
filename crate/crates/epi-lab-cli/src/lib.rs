//! Batch front end: experiment configs in, CSV/JSON/SVG reports out.

pub mod battery;
pub mod config;
pub mod report;
pub mod runner;

use thiserror::Error;

/// CLI-level failures with their contractual exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("numerical failure at gamma = {gamma}: {reason}")]
    Numerical { gamma: f64, reason: String },

    #[error("cannot access `{path}`: {reason}")]
    Io { path: String, reason: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Numerical { .. } => 3,
            Self::Io { .. } => 4,
        }
    }
}
