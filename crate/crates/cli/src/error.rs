use std::fmt;
use std::process::ExitCode;

use ppgpr_core::Error as CoreError;

/// Failure of one CLI invocation, mapped onto the exit code contract.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config, or input files: exit 1.
    Usage(String),
    /// The numerics gave up: exit 2.
    Numerical(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(1),
            CliError::Numerical(_) => ExitCode::from(2),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Singular { .. }
            | CoreError::NotSymmetric(_)
            | CoreError::Diverged
            | CoreError::MetricUndefined { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
