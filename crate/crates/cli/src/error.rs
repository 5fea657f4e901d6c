use std::path::PathBuf;

use qfmevo_core::Error as CoreError;

/// Failures surfaced by the runner. Each maps to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Runtime(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) | CliError::Write { .. } => 3,
        }
    }

    pub(crate) fn write(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Write {
            path: path.into(),
            source,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::Config(_) | CoreError::Precondition(_) => CliError::Usage(msg),
            CoreError::Load(_) | CoreError::Split(_) | CoreError::Sampling(_) => CliError::Data(msg),
            CoreError::Training(_) | CoreError::Evaluation(_) => CliError::Runtime(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
