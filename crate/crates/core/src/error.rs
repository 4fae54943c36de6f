use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A caller-supplied value is outside the operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The requested quantity does not exist for these parameters
    /// (no stationary state, undefined logarithm, infinite critical value).
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter combination breaks a stability or positivity requirement.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {message} (residual {residual:e})")]
    Numerical { message: String, residual: f64 },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
