//! CLI failure modes, each tied to a process exit code.

use std::fmt;

/// Everything that can abort a run, sorted by exit code: invalid
/// configuration (2), a failed internal consistency check (3), an I/O
/// failure while emitting a report (4).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// The merged flag/file configuration is unusable.
    Config(String),
    /// A run-time cross-check failed (e.g. the coupling oracle and the
    /// bound verdicts disagree).
    Check(String),
    /// A report file could not be written.
    Io(String),
}

impl CliError {
    /// The process exit code this error maps to.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Check(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(message) => write!(f, "invalid configuration: {message}"),
            CliError::Check(message) => write!(f, "consistency check failed: {message}"),
            CliError::Io(message) => write!(f, "i/o failure: {message}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<lglab_core::Error> for CliError {
    fn from(err: lglab_core::Error) -> Self {
        match err {
            lglab_core::Error::Io(message) => CliError::Io(message),
            other => CliError::Config(other.to_string()),
        }
    }
}
