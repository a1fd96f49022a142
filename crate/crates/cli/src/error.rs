use std::path::{Path, PathBuf};

use dagwood::amm::StepError;
use dagwood::oracle::OracleError;
use dagwood::solver::SolveError;
use thiserror::Error;

/// Every failure the front end reports, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    /// Malformed JSON or a record of the wrong shape.
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    /// Well-formed input describing an impossible game. `at` is the JSON
    /// path of the offending value.
    #[error("{path}: {at}: {message}")]
    Validation { path: PathBuf, at: String, message: String },
    #[error("{path}: solver failed: {source}")]
    Solve { path: PathBuf, source: SolveError },
    #[error("{path}: oracle failed: {source}")]
    Oracle { path: PathBuf, source: OracleError },
    /// A replayed transaction was rejected.
    #[error("{path}: step {step}: {source}")]
    Step { path: PathBuf, step: usize, source: StepError },
    #[error("{0}")]
    Output(String),
}

impl CliError {
    /// 1 for unreadable or invalid input, 2 for solver and replay failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Validation { .. } | CliError::Output(_) => 1,
            CliError::Solve { .. } | CliError::Oracle { .. } | CliError::Step { .. } => 2,
        }
    }

    pub(crate) fn parse(path: &Path, e: serde_json::Error) -> Self {
        CliError::Parse { path: path.to_owned(), line: e.line(), column: e.column(), message: e.to_string() }
    }

    pub(crate) fn invalid(path: &Path, at: impl Into<String>, message: impl ToString) -> Self {
        CliError::Validation { path: path.to_owned(), at: at.into(), message: message.to_string() }
    }
}
