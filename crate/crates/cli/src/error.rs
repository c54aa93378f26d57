//! CLI error taxonomy mapped onto exit codes:
//! 0 ok, 2 config error, 3 numeric error, 4 check-suite failure.

use crate::config::ConfigError;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    CheckFailed(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::CheckFailed(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Numeric(msg) => write!(f, "numeric error: {msg}"),
            CliError::CheckFailed(msg) => write!(f, "check failure: {msg}"),
            CliError::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<qfest::Error> for CliError {
    fn from(e: qfest::Error) -> Self {
        match e {
            qfest::Error::NonFinite { .. } | qfest::Error::DegenerateFit(_) => {
                CliError::Numeric(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}
