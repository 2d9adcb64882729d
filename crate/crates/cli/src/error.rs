use std::io;
use std::path::Path;

use thiserror::Error;

/// Errors surfaced by the command-line layer, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or input data, detected before any sampling starts.
    #[error("{0}")]
    Validation(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Model(#[from] tensor_art::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_ABORTED: i32 = 130;

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    pub fn at_path(path: &Path, source: io::Error) -> Self {
        CliError::io(path.display().to_string(), source)
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(tensor_art::Error::Aborted) => EXIT_ABORTED,
            CliError::Model(e) if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::validation("x").exit_code(), 2);
        assert_eq!(CliError::from(tensor_art::Error::Aborted).exit_code(), 130);
        let num = tensor_art::Error::numerical("not PD").at_iteration(4);
        assert_eq!(CliError::from(num).exit_code(), 3);
        assert_eq!(CliError::from(tensor_art::Error::domain("bad")).exit_code(), 2);
    }
}
