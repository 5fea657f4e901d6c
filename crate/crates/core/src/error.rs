use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is outside its allowed range.
    #[error("configuration error: {0}")]
    Config(String),
    /// An operation was called with arguments violating its contract
    /// (bad qubit index, dimension mismatch, malformed genome, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("training error: {0}")]
    Training(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("split error: {0}")]
    Split(String),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error(transparent)]
    Load(#[from] LoadError),
}

/// Failures while reading a dataset file. Each kind is reported distinctly.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: file is empty or has no data rows")]
    Empty(PathBuf),
    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),
    #[error("line {line}: expected {expected} fields, found {found}")]
    Ragged {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column `{column}`: cannot parse `{value}` as a finite number")]
    Parse {
        line: u64,
        column: String,
        value: String,
    },
    #[error("positive class `{0}` does not occur in the label column")]
    UnknownClass(String),
    #[error("malformed csv: {0}")]
    Csv(String),
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
