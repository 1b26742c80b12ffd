use std::path::{Path, PathBuf};

use thiserror::Error;

/// Failure of a command, grouped by process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> CliError {
        CliError::Io {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }

    pub fn validation(msg: impl Into<String>) -> CliError {
        CliError::Validation(msg.into())
    }
}

impl From<pnn_core::Error> for CliError {
    fn from(e: pnn_core::Error) -> Self {
        use pnn_core::Error as E;
        match e {
            E::Shape(_) | E::Domain(_) | E::Config(_) => CliError::Validation(e.to_string()),
            E::NotPositiveDefinite { .. } | E::Diverged { .. } | E::Model(_) => CliError::Numerical(e.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
