use std::fmt;

use flprint_core::Error;

/// Failure of a command, classified by process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config, profiles or missing inputs. Exit 1.
    Config(String),
    /// Unreadable or inconsistent data. Exit 2.
    Data(String),
    /// `reproduce` finished but missed its thresholds. Exit 3.
    Threshold(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Threshold(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Threshold(m) => write!(f, "acceptance thresholds not met: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidProfile(_)
            | Error::DegenerateProfile(_)
            | Error::InvalidParameter(_)
            | Error::EmptyGrid
            | Error::BadRange { .. } => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
