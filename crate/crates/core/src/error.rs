//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::quantum::Outcome;

/// Errors reported by the analytic and stochastic pipelines.
///
/// Statistical disagreement is never an error — empirical results carry
/// their own standard errors and are judged by the caller.  Errors are
/// reserved for inputs that make a computation meaningless.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A phase argument was NaN or infinite.
    #[error("phase must be finite, got {0}")]
    NonFinitePhase(f64),

    /// A projective collapse was requested onto an outcome of exactly zero
    /// Born probability.
    #[error("outcome {0} has zero probability and cannot be realised")]
    ImpossibleOutcome(Outcome),

    /// Two phases that must be ordered were passed in the wrong order.
    #[error("phases out of order: {earlier} must precede {later}")]
    PhaseOrder { earlier: f64, later: f64 },

    /// A measurement schedule failed validation.
    #[error("invalid measurement schedule: {0}")]
    InvalidSchedule(String),

    /// A pure or mixed state failed validation.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A set of pairwise outcome tables failed validation.
    #[error("invalid pairwise tables: {0}")]
    InvalidTables(String),

    /// Any other argument outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An input/output failure while emitting or reading a report.
    #[error("i/o failure: {0}")]
    Io(String),

    /// A report that could not be parsed or carried the wrong schema.
    #[error("malformed report: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
