use std::path::PathBuf;

use thiserror::Error;

/// Failures of a CLI run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("oracle refused: {0}")]
    Budget(String),
    #[error("oracle soundness violated: {0}")]
    Soundness(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Solver(qce_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Budget(_) => 3,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<qce_core::Error> for CliError {
    fn from(e: qce_core::Error) -> Self {
        match e {
            qce_core::Error::Config(_) | qce_core::Error::DegeneratePattern => Self::Config(e.to_string()),
            qce_core::Error::BudgetExceeded { .. } => Self::Budget(e.to_string()),
            other => Self::Solver(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
