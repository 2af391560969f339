use std::path::Path;

use thiserror::Error;

/// Failures of a workbench command, grouped by process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Missing files, malformed input, invalid arguments. Exit code 2.
    #[error("{0}")]
    Input(String),

    /// The input was well formed but the computation has no answer. Exit code 3.
    #[error("{0}")]
    Degenerate(String),

    /// Anything else, such as a failing encoder. Exit code 1.
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::Other(_) => 1,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Input(format!("{}: {err}", path.display()))
    }

    /// Prefixes the message with the entry or file it concerns.
    pub fn context(self, what: impl std::fmt::Display) -> Self {
        match self {
            CliError::Input(m) => CliError::Input(format!("{what}: {m}")),
            CliError::Degenerate(m) => CliError::Degenerate(format!("{what}: {m}")),
            CliError::Other(m) => CliError::Other(format!("{what}: {m}")),
        }
    }
}

impl From<qoe_forge::Error> for CliError {
    fn from(e: qoe_forge::Error) -> Self {
        if e.is_degenerate() {
            CliError::Degenerate(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
