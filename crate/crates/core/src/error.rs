use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A documented precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A quadrature or fit did not reach its tolerance.
    #[error("numerical failure: {message} (estimate {estimate:.3e}, tolerance {tolerance:.3e})")]
    Numerical {
        message: String,
        estimate: f64,
        tolerance: f64,
    },
    /// A universal constant the computation needs is not known.
    #[error("unknown universal constant: {0}")]
    UnknownConstant(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn numerical(message: impl Into<String>, estimate: f64, tolerance: f64) -> Self {
        Error::Numerical {
            message: message.into(),
            estimate,
            tolerance,
        }
    }
}
