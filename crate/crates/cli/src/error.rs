use std::fmt;
use std::process::ExitCode;

/// Failures surfaced to the operator, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or input data (exit 2).
    Validation(String),
    /// I/O or numerical failure during a run (exit 3).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::from(3),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<partyrnn_core::Error> for CliError {
    fn from(e: partyrnn_core::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}
