use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    /// Bad arguments, files or configuration.
    Input,
    /// Training or generation produced non-finite values.
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub failure: Failure,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            failure: Failure::Input,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.failure {
            Failure::Input => 2,
            Failure::Numeric => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<u2v_core::Error> for CliError {
    fn from(e: u2v_core::Error) -> Self {
        Self {
            failure: if e.is_numeric() { Failure::Numeric } else { Failure::Input },
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::input(format!("csv: {e}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::input(format!("io: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
