//! Unified error type for the crate.
//!
//! The variants map onto how the CLI reports failures: configuration and
//! feasibility problems are refusals (exit code 2), everything else is a
//! runtime error (exit code 1).

use std::fmt;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid or inconsistent configuration: bad parameter ranges,
    /// dimension mismatches, unknown config keys, refused unstable runs.
    Config(String),
    /// A requested distribution cannot exist on the given support with the
    /// given moments.
    Infeasible(String),
    /// A formula was evaluated outside its mathematical hypotheses (for
    /// example a slack larger than the collapse threshold).
    Precondition(String),
    /// The dispatch state machine was driven past the end of a cycle
    /// without resampling.
    State(String),
    /// Not enough data for the requested estimator.
    InsufficientData(String),
    /// Filesystem or serialization failure.
    Io(String),
}

impl Error {
    /// True for errors that should be reported as a refusal of the
    /// configuration rather than a runtime failure.
    pub fn is_config_refusal(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Infeasible(_) | Error::Precondition(_)
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Infeasible(msg) => write!(f, "infeasible distribution: {msg}"),
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::State(msg) => write!(f, "dispatch state error: {msg}"),
            Error::InsufficientData(msg) => write!(f, "insufficient data: {msg}"),
            Error::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
