use std::time::Duration;

use thiserror::Error;

use crate::bo::Trace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad argument shape or value (dimension mismatch, out-of-bounds input).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Cholesky failed even after jitter escalation.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Every hyperparameter restart failed.
    #[error("GP fit failed: {0}")]
    Fit(String),

    /// A component was called in a way its contract forbids.
    #[error("usage error: {0}")]
    Usage(String),

    /// Invalid experiment or policy description.
    #[error("invalid spec: {0}")]
    Spec(String),

    /// External objective broke the line-delimited JSON protocol.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("external objective did not answer within {0:?}")]
    Timeout(Duration),

    /// A BO run stopped early. `partial` holds everything recorded before the failure.
    #[error("run failed after {} records: {source}", partial.records.len())]
    Run {
        source: Box<Error>,
        partial: Box<Trace>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Innermost error, looking through `Run` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Run { source, .. } => source.root(),
            other => other,
        }
    }

    /// Whether the failure came from the external-objective protocol.
    pub fn is_protocol(&self) -> bool {
        matches!(self.root(), Error::Protocol(_) | Error::Timeout(_))
    }
}
