use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("schema error: missing required column `{column}` in {path}")]
    Schema { path: PathBuf, column: String },

    #[error("decode error: {0}")]
    Decode(String),

    #[error("release rejected: {reason}: {}", doc_ids.join(", "))]
    ReleaseRejected { reason: String, doc_ids: Vec<String> },

    #[error("store is locked by another writer: {0}")]
    Locked(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the environment rather than by the input.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Locked(_))
    }
}
