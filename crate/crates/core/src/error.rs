use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of a mathematical function.
    #[error("domain error: {0}")]
    Domain(String),
    /// Model parameters or run settings violate a documented constraint.
    #[error("configuration error: {0}")]
    Config(String),
    /// The drift-balance equation has no root (s_N = 0).
    #[error("no root: {0}")]
    NoRoot(String),
    /// A dense/exact solver was asked for a state space above its guard.
    #[error("size error: {0}")]
    Size(String),
    /// An internal consistency check (normalization, balance) failed.
    #[error("numeric check failed: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::$variant(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
