use std::path::PathBuf;

use thiserror::Error;

use crate::query::ParseError;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Numeric,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Data => "data",
            ErrorCategory::Numeric => "numeric",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Data => 3,
            ErrorCategory::Numeric => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("taxonomy: {0}")]
    Taxonomy(String),
    #[error("unknown class code '{0}'")]
    UnknownClass(String),
    #[error("query for class '{class}': {source}")]
    Query {
        class: String,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Corpus { path: PathBuf, message: String },
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("embeddings: {0}")]
    Embeddings(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("training diverged at epoch {epoch}: {message}")]
    Diverged { epoch: usize, message: String },
    #[error("metrics: {0}")]
    Metrics(String),
    #[error("attribution: {0}")]
    Attribution(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Taxonomy(_) | Error::Query { .. } | Error::Parse(_) | Error::Config(_) => {
                ErrorCategory::Config
            }
            Error::NonFinite(_) | Error::Diverged { .. } => ErrorCategory::Numeric,
            _ => ErrorCategory::Data,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
