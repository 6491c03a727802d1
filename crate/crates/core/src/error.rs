use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HvaError {
    /// Malformed or inconsistent arguments (size mismatch, bad ranges, parse failures).
    #[error("invalid input: {0}")]
    Input(String),
    /// The request exceeds a hard size cap (dense oracles, statevector width).
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// A documented precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// The request is well formed but outside what is implemented.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, HvaError>;

macro_rules! ensure {
    ($cond:expr, $kind:ident, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::HvaError::$kind(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
