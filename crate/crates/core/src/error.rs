use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("empty corpus: no document contains a token")]
    EmptyCorpus,

    #[error("line {line}: expected {expected} vector components, found {found}")]
    EmbeddingDimension {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: probability {value} outside [0, 1]")]
    ProbabilityOutOfRange { line: usize, value: String },

    #[error("scorer `{scorer}` requires {resource}")]
    MissingResource {
        scorer: &'static str,
        resource: &'static str,
    },

    #[error("no prediction for candidate {candidate} of instance `{instance}`")]
    MissingPrediction { instance: String, candidate: usize },

    #[error("instance `{instance}`: {reason}")]
    InvalidInstance { instance: String, reason: String },

    #[error("unknown instance id `{0}`")]
    UnknownId(String),

    #[error("instance id sets differ: {0}")]
    IdSetMismatch(String),

    #[error("unjudged instance: no relevant candidate")]
    UnjudgedInstance,

    #[error("run has no scores for: {}", .0.join(", "))]
    MissingRunScores(Vec<String>),

    #[error("degenerate test: {0}")]
    DegenerateTest(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

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

    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            reason: reason.into(),
        }
    }

    pub(crate) fn instance(id: &str, reason: impl Into<String>) -> Self {
        Error::InvalidInstance {
            instance: id.to_owned(),
            reason: reason.into(),
        }
    }
}
