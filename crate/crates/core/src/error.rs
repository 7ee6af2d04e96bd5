use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures reading one of the binary formats (FSEQ feature files, FGNN checkpoints).
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated payload: need {needed} bytes, have {available}")]
    Truncated { needed: u64, available: u64 },
    #[error("header dimensions overflow: {0}")]
    Overflow(String),
    #[error("malformed content: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("backward called without a preceding forward (stale cache)")]
    StaleCache,
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("class index {index} out of range for {classes} classes")]
    InvalidClass { index: usize, classes: usize },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("voice pool exhausted after {0} draws")]
    PoolExhausted(usize),
    #[error("external command failed: {0}")]
    External(String),
    #[error("{path}: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, source: FormatError) -> Self {
        Error::Format {
            path: path.into(),
            source,
        }
    }

    /// Short machine-parsable category used by the command-line front end.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Format { .. } | Error::Parse { .. } => "format",
            Error::Shape { .. } => "shape",
            Error::Config(_) | Error::UnknownLabel(_) | Error::InvalidClass { .. } => "config",
            Error::EmptyInput(_) | Error::Degenerate(_) => "data",
            Error::NonFinite(_) => "numeric",
            Error::StaleCache => "internal",
            Error::PoolExhausted(_) => "exhausted",
            Error::External(_) => "external",
        }
    }
}
