use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed JSON: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: schema violation: {message}")]
    Schema { line: usize, message: String },

    #[error("line {line}: duplicate paper id {id:?}")]
    DuplicateId { id: String, line: usize },

    #[error("no term occurs at least {min_count} times; vocabulary is empty")]
    EmptyVocabulary { min_count: usize },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("document column {column} of the term-document matrix is all zero")]
    ZeroColumn { column: usize },

    #[error("topic {topic} has an all-zero topic vector")]
    DegenerateTopic { topic: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("term {0:?} is not indexed")]
    UnknownTerm(String),

    #[error("unknown venue {0:?}")]
    UnknownVenue(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("every model in the topic-number sweep failed to train")]
    AllFitsFailed,

    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),

    #[error("output directory is locked by {0}; another run is writing there")]
    Locked(PathBuf),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit status: 2 input or schema, 3 missing artifact, 4 bad selector, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::Schema { .. }
            | Error::DuplicateId { .. }
            | Error::EmptyVocabulary { .. }
            | Error::EmptyInput(_)
            | Error::InvalidParameter(_)
            | Error::Json(_) => 2,
            Error::MissingArtifact(_) => 3,
            Error::UnknownVenue(_) => 4,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
