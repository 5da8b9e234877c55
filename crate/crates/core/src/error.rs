use std::path::PathBuf;

use thiserror::Error;

/// Failures reported by a language-model backend.
#[derive(Debug, Error)]
pub enum LmError {
    /// The backend could not be reached or answered with a non-success status.
    /// Callers may retry.
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed backend response: {0}")]
    Malformed(String),
}

impl LmError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, LmError::Transport(_))
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sentence")]
    EmptySentence,
    #[error("invalid word {0:?}: words must be non-empty and contain no whitespace")]
    InvalidWord(String),
    #[error("no saved state")]
    NoSavedState,
    #[error("nothing to delete: backtrackTo({n}) needs more than {n} variables, model has {len}")]
    NothingToDelete { n: usize, len: usize },
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("invalid LM parameters: {0}")]
    InvalidParams(String),
    #[error("unknown task {name:?}; valid names are: {valid}")]
    UnknownTask { name: String, valid: String },
    #[error(
        "unknown ordering {0:?}; expected probability, ppl, char-target or char-target:<pivot>"
    )]
    UnknownOrdering(String),
    #[error("{path}:{line}: {message}")]
    TableFormat {
        path: String,
        line: usize,
        message: String,
    },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("task file {path}: {message}")]
    TaskFile { path: PathBuf, message: String },
    #[error("invalid backend spec {0:?}; expected table:<path>, ngram:<path>[,order[,smoothing]] or remote:<url>")]
    BackendSpec(String),
    #[error("oracle refused: search exceeded {limit} nodes")]
    OracleLimit { limit: u64 },
    #[error("empty report")]
    EmptyReport,
    #[error("report: {0}")]
    Report(String),
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
