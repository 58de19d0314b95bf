use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },

    #[error("backward requires a scalar root, got shape {0:?}")]
    NonScalarRoot(Vec<usize>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Record { line: usize, message: String },

    #[error("tree parse error at offset {offset}: {message}")]
    TreeParse { offset: usize, message: String },

    #[error("invalid merge trace: {0}")]
    InvalidTrace(String),

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("non-finite loss in epoch {epoch}, batch {batch} (document {doc_id})")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        doc_id: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
