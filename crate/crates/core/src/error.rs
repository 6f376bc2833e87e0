use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A dimension or enumeration exceeded its configured cap.
    #[error("size cap exceeded: {what} needs {requested}, cap is {cap}")]
    Size {
        what: &'static str,
        requested: u128,
        cap: u128,
    },
    /// A caller supplied an invalid argument.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// An internal contract was violated (non-Hermitian input, negative mass, ...).
    #[error("contract violated: {0}")]
    Contract(String),
    /// A textual spec (observable, circuit) failed to parse.
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Contract(msg.into()))
}
