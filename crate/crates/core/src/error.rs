use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate record id {id:?} at line {line}")]
    DuplicateId { id: String, line: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("word {0:?} is not in the embedding vocabulary")]
    OutOfVocabulary(String),

    #[error("vocabulary is empty after applying min_count = {min_count}")]
    EmptyVocabulary { min_count: usize },

    #[error("model dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("community has no in-vocabulary words")]
    CommunityOutOfVocabulary,

    #[error("graph needs at least {needed} vertices, found {found}")]
    TooFewVertices { needed: usize, found: usize },

    #[error("no communities found")]
    NoCommunities,

    #[error("duplicate community label {0:?}")]
    DuplicateLabel(String),

    #[error("unknown perception label {0:?}")]
    UnknownLabel(String),

    #[error("need at least 2 neighborhoods, found {0}")]
    TooFewNeighborhoods(usize),

    #[error("invalid neighborhood {name:?}: {reason}")]
    InvalidNeighborhood { name: String, reason: String },

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn read(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Read {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn write(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Write {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
