use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, FscoError>;

#[derive(Debug, Error)]
pub enum FscoError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value{}: {what}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    Numeric { step: Option<u64>, what: String },

    #[error("invalid state: {0}")]
    State(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("format error at byte offset {offset}: {msg}")]
    Format { offset: usize, msg: String },

    #[error("truncated input: expected {expected} bytes, found {found}")]
    Length { expected: usize, found: usize },

    #[error("config error (line {line}, key `{key}`): {msg}")]
    Config { line: usize, key: String, msg: String },

    #[error("cycle {cycle}: {source}")]
    AtCycle {
        cycle: u64,
        #[source]
        source: Box<FscoError>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl FscoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FscoError::Io { path: path.into(), source }
    }

    pub(crate) fn numeric(what: impl Into<String>) -> Self {
        FscoError::Numeric { step: None, what: what.into() }
    }

    /// Stamps an update-step index onto a numeric error that lacks one.
    pub(crate) fn with_step(self, step: u64) -> Self {
        match self {
            FscoError::Numeric { step: None, what } => FscoError::Numeric { step: Some(step), what },
            e => e,
        }
    }

    pub(crate) fn at_cycle(self, cycle: u64) -> Self {
        match self {
            e @ FscoError::AtCycle { .. } => e,
            e => FscoError::AtCycle { cycle, source: Box::new(e) },
        }
    }

    /// True when the error (or the error it wraps) is a non-finite numeric failure.
    pub fn is_numeric(&self) -> bool {
        match self {
            FscoError::Numeric { .. } => true,
            FscoError::AtCycle { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}
