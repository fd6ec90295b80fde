use std::process::ExitCode;

use sps_core::SpsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: SpsError,
    },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// 2 for a singular or degenerate design, 1 for everything else.
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Core { source: SpsError::SingularDesign { .. } | SpsError::DegenerateSample { .. }, .. } => {
                ExitCode::from(2)
            }
            _ => ExitCode::from(1),
        }
    }
}

pub trait Context<T> {
    fn context(self, what: impl Into<String>) -> Result<T, CliError>;
}

impl<T> Context<T> for Result<T, SpsError> {
    fn context(self, what: impl Into<String>) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core { context: what.into(), source })
    }
}

impl<T> Context<T> for std::io::Result<T> {
    fn context(self, what: impl Into<String>) -> Result<T, CliError> {
        self.map_err(|e| CliError::Config(format!("{}: {e}", what.into())))
    }
}
