use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the adaptation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message} at line {line}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("duplicate pair ({0}, {1})")]
    DuplicatePair(String, String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("token id {id} out of range for vocabulary of size {vocab_size}")]
    TokenOutOfRange { id: u32, vocab_size: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("no teacher score for pair ({0}, {1})")]
    TeacherMiss(String, String),

    #[error("missing latent topic for `{0}`")]
    MissingTopic(String),

    #[error("query `{0}` has no source document")]
    MissingSource(String),

    #[error("unknown document `{0}`")]
    UnknownDocument(String),

    #[error("unknown query `{0}`")]
    UnknownQuery(String),

    #[error("no negative pool for query `{0}`")]
    MissingPool(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("missing pool dump for step {0}")]
    MissingPoolDump(usize),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("encoding failed for document `{id}`: {source}")]
    EncodeDoc {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("serialization error: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable variant name for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::DuplicateId(_) => "duplicate_id",
            Error::DuplicatePair(..) => "duplicate_pair",
            Error::Config(_) => "config",
            Error::TokenOutOfRange { .. } => "token_out_of_range",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::TeacherMiss(..) => "teacher_miss",
            Error::MissingTopic(_) => "missing_topic",
            Error::MissingSource(_) => "missing_source",
            Error::UnknownDocument(_) => "unknown_document",
            Error::UnknownQuery(_) => "unknown_query",
            Error::MissingPool(_) => "missing_pool",
            Error::Empty(_) => "empty",
            Error::MissingPoolDump(_) => "missing_pool_dump",
            Error::Degenerate(_) => "degenerate",
            Error::EncodeDoc { .. } => "encode_doc",
            Error::Serde(_) => "serde",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
