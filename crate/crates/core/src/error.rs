use std::io;

use thiserror::Error;

/// Errors produced by the embedding, baseline and data-loading routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two elements cannot be composed because their extents disagree on an
    /// axis other than the composition axis.
    #[error("cannot compose along axis {axis}: extents differ on axis {offending_axis} ({left} vs {right})")]
    Composition {
        axis: usize,
        offending_axis: usize,
        left: u64,
        right: u64,
    },

    #[error("malformed IDX data: {0}")]
    Format(String),

    #[error("inconsistent dataset: {0}")]
    Consistency(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
