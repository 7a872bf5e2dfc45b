use thiserror::Error;

/// Errors produced by the channel simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("time {t} s is outside the trajectory span [{start}, {end}] s")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numeric failure at {stage} {index}: value is not finite")]
    Diverged { stage: &'static str, index: usize },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for failures caused by numerics rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Diverged { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
