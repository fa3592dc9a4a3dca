use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("entry point {0} is not present in the layer")]
    InvalidEntry(u32),

    #[error("ingestion error: {0}")]
    Ingestion(String),

    #[error("{kind} at byte offset {offset}")]
    Format { offset: u64, kind: FormatError },

    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Reasons a binary file (index or fvecs) failed to parse.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("unexpected end of input")]
    Truncated,
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(offset: u64, kind: FormatError) -> Self {
        Error::Format { offset, kind }
    }
}
