use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Argument inside the domain but outside the validated accuracy envelope.
    #[error("range error: {0}")]
    Range(String),
    /// The large-deviation sandwich needs a strictly positive tail shift.
    #[error("small-epsilon regime, sandwich not applicable (shift = {0})")]
    SmallEpsilon(f64),
    /// An iterative method failed to reach its tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),
    /// Malformed sweep configuration.
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn range(msg: impl Into<String>) -> Error {
    Error::Range(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
