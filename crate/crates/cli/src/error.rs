use std::fmt;

use blowuplab_core::Error;

/// Failure of a subcommand, split by exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad configuration, flags or parameters (exit 2).
    Input(String),
    /// The computation itself failed (exit 1).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(m) | Error::InvalidData(m) => CliError::Input(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(format!("io: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
