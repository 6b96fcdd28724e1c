use std::path::PathBuf;

use crate::svm::TrainedModel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Input is well-formed but outside what the method supports.
    #[error("{0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The dual solver hit its iteration cap. The best iterate is attached.
    #[error("solver did not converge after {iterations} iterations (violation {violation:.3e})")]
    NotConverged {
        iterations: usize,
        violation: f64,
        best: Box<TrainedModel>,
    },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
