use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the test pipeline.
///
/// Variants fall into two classes: problems with the supplied data or
/// arguments, and numeric failures (degenerate geometry, zero variance).
/// The CLI maps the classes to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    InvalidInput(String),

    #[error("non-generic input; perturb ({0})")]
    NonGeneric(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse error class used to pick a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Data,
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidInput(_) | Error::Io(_) | Error::Csv(_) => ErrorClass::Data,
            Error::NonGeneric(_) | Error::Numeric(_) => ErrorClass::Numeric,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
