use thiserror::Error;

/// Failures raised by the library.
///
/// `Config` covers anything the caller can fix by changing inputs; `Numerical`
/// flags a defect detected during a computation (non-convergence, singular
/// systems, audits out of bounds).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
