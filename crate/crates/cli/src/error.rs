use thiserror::Error;

/// Failures of the driver, each with its own process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config invalid: {0}")]
    Config(String),
    #[error("resource exceeded: {0}")]
    Resource(String),
    #[error("{0}")]
    Execution(String),
}

/// Exit statuses. Check failures are reported through reports, not errors.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const CONFIG_INVALID: i32 = 2;
    pub const RESOURCE_EXCEEDED: i32 = 3;
    pub const EXECUTION_ERROR: i32 = 4;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG_INVALID,
            CliError::Resource(_) => exit::RESOURCE_EXCEEDED,
            CliError::Execution(_) => exit::EXECUTION_ERROR,
        }
    }
}

impl From<hsmax::Error> for CliError {
    fn from(e: hsmax::Error) -> Self {
        CliError::Execution(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Execution(e.to_string())
    }
}
