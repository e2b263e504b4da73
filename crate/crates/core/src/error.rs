use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the library. Every variant except [`Error::NonFinite`]
/// describes bad input or a violated contract; `NonFinite` is a numeric
/// failure during training.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}, line {line}: {message}")]
    Parse {
        context: String,
        line: usize,
        message: String,
    },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("line {line}: record {id:?} has no label")]
    MissingLabel { line: usize, id: String },
    #[error("unknown class {0:?}")]
    UnknownClass(String),
    #[error("split infeasible for classes: {}", .0.join(", "))]
    InfeasibleSplit(Vec<String>),
    #[error("vocabulary is empty after applying min_count={0}")]
    EmptyVocabulary(u64),
    #[error("unknown token {0:?}")]
    UnknownToken(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("strategy needs at least {needed} layers, got {got}")]
    NotEnoughLayers { needed: usize, got: usize },
    #[error("replacement pool is empty")]
    EmptyPool,
    #[error("translation failed for {id:?}: {message}")]
    Translation { id: String, message: String },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("class sets differ; only in model: [{}], only in audit: [{}]", .only_model.join(", "), .only_audit.join(", "))]
    ClassMismatch {
        only_model: Vec<String>,
        only_audit: Vec<String>,
    },
    #[error("class {class:?} has {count} examples, fewer than {folds} folds")]
    TooFewForFolds {
        class: String,
        count: usize,
        folds: usize,
    },
    #[error("no gold label for id {0:?}")]
    MissingGold(String),
    #[error("featurizer unavailable: {0}")]
    Featurizer(String),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, line: usize, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            line,
            message: message.to_string(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFinite(_) => 3,
            _ => 2,
        }
    }
}
