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
    #[error("{path}:{line}: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("question {qid} has no gold answers on a labeled split")]
    MissingAnswers { qid: String },
    #[error("question {qid} does not fit in a window of {max_len} tokens")]
    QuestionTooLong { qid: String, max_len: usize },
    #[error("empty dataset: {0}")]
    EmptyDataset(String),
    #[error("duplicate name: {0}")]
    DuplicateName(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("window {0} has an empty passage span")]
    NoValidSpan(String),
    #[error("split layer {k} outside [1, {max}]")]
    LayerOutOfRange { k: usize, max: usize },
    #[error("window {0} carries no answer labels")]
    UnlabeledWindow(String),
    #[error("teacher logit cache has no entry for window {0}")]
    MissingCacheEntry(String),
    #[error("tokenizer mismatch: expected {expected}, found {found}")]
    TokenizerMismatch { expected: String, found: String },
    #[error("no companion model for domain {0}")]
    MissingCompanion(String),
    #[error("need at least {needed} source domains, got {got}")]
    TooFewDomains { needed: usize, got: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("bad file format in {path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
