//! Error type of the `nepv` binary, carrying the process exit code.
//!
//! Exit codes: `0` success, `2` configuration error, `3` solver
//! non-convergence (or a failed equivalence check), `4` I/O error.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad config file, bad override, bad parameter, unknown id, missing
    /// referenced file. Exit code 2.
    Config(String),
    /// The requested solve (or check) ran but did not reach its target.
    /// Exit code 3.
    NonConvergence(String),
    /// Reading a data file or writing an output file failed, including
    /// malformed dataset rows. Exit code 4.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    /// Wraps a filesystem error with the path it concerns.
    pub fn io(context: &str, err: std::io::Error) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::NonConvergence(msg) => write!(f, "not converged: {msg}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;
