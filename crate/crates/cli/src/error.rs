//! Command-level errors and their exit codes.

use bergman_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or invalid configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// A numerical stage failed (conditioning, cutoff, factorization, …).
    #[error("numerical failure: {0}")]
    Numerical(#[from] CoreError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 3 for numerical
    /// failures and unwritable output.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}
