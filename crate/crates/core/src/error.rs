use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },

    #[error("{path}: invalid UTF-8 on line {line}")]
    Decode { path: PathBuf, line: usize },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("boundary position {position} is not an internal position of the corpus")]
    BoundaryOutOfRange { position: usize },

    #[error("segmentations disagree on the underlying corpus: {0}")]
    CorpusMismatch(String),

    #[error("invalid range `{0}`: expected lo:hi:step with step > 0 and lo <= hi")]
    InvalidRange(String),

    #[error("invalid penalty parameters: {0}")]
    InvalidParams(String),

    #[error("{0}")]
    Contract(String),

    #[error("statistic undefined: {0}")]
    Undefined(&'static str),

    #[error("ledger: {0}")]
    Ledger(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause: source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
