use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("source evaluation produced a non-finite value at xi = {xi}")]
    Evaluation { xi: f64 },

    #[error("result out of floating-point range: {0}")]
    Range(String),

    /// The quadrature of f(u) fell below the admissible floor, which means
    /// the lower bound f >= sigma is violated somewhere upstream.
    #[error("nonlocal integral {integral:e} is below the floor {floor:e}")]
    Degenerate { integral: f64, floor: f64 },

    #[error("non-finite state produced by {0}")]
    NonFinite(&'static str),

    #[error("Newton solve did not converge after {iterations} iterations (residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
