use thiserror::Error;

/// Errors raised by the construction and evaluation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("duplicate points at indices {first} and {second}")]
    DuplicatePoint { first: usize, second: usize },

    #[error("graph is disconnected: no path between {from} and {to}")]
    Disconnected { from: usize, to: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
