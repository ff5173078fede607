use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("{op} expects a vector operand, got shape {shape:?}")]
    NotVector { op: &'static str, shape: Vec<usize> },

    #[error("{op}: {reason}")]
    InvalidArgument { op: &'static str, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("operation {op} requires {expected} mode")]
    ModeMismatch {
        op: &'static str,
        expected: &'static str,
    },

    #[error("non-finite gradient in parameter `{name}`")]
    NonFiniteGradient { name: String },

    #[error("dialogue {dialogue}: {source}")]
    InDialogue {
        dialogue: String,
        #[source]
        source: Box<Error>,
    },

    #[error("corpus validation failed with {} violation(s):\n{}", .0.len(), .0.join("\n"))]
    Validation(Vec<String>),

    #[error("cannot split corpus: {0}")]
    Split(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(op: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            op,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad inputs (as opposed to I/O or runtime failures).
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InDialogue { source, .. } => source.is_validation(),
            Error::Io { .. } | Error::Csv { .. } | Error::NonFiniteGradient { .. } => false,
            _ => true,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
