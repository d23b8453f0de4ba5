use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("duplicate record for firm {firm} on {date}")]
    DuplicateRecord { firm: String, date: String },

    #[error("insufficient samples for split: {0}")]
    InsufficientSamples(String),

    #[error("zero variance in {0}")]
    ZeroVariance(String),

    #[error("not enough values: {0}")]
    TooFewValues(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("missing gradient for parameter {0}")]
    MissingGradient(String),

    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("degenerate baseline: baseline MSE is zero, skill score undefined")]
    DegenerateBaseline,

    #[error("no comparable samples: {0}")]
    NoComparableSamples(String),

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
