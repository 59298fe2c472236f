//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied an invalid argument or inconsistent dimensions.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// A numerical kernel failed (root bracketing, SVD, ...).
    #[error("internal numerical error: {0}")]
    Internal(String),
    /// A factorization could not be set up, e.g. a singular matrix.
    #[error("setup error: {0}")]
    Setup(String),
    /// A linear solve failed.
    #[error("solver error: {0}")]
    Solver(String),
    /// A time step of an unsteady run failed.
    #[error("time step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
