//! Error type shared by the whole crate.

/// Failure classes surfaced by the library.
///
/// `Domain` covers arguments outside the mathematical domain of an
/// operation (a point below the spectral edge, a non-positive aspect
/// ratio). `Dimension` covers shape mismatches between matrices and index
/// sets. `Degenerate` covers inputs for which the requested quantity is not
/// defined (fewer than two values to split, all values equal).
/// `Unavailable` covers estimates that the data cannot support, such as a
/// noise level when every eigenvalue sits above the detection threshold.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("estimate unavailable: {0}")]
    Unavailable(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub(crate) fn unavailable(msg: impl Into<String>) -> Self {
        Error::Unavailable(msg.into())
    }
}
