use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("maze dimension {0} outside [2, 56]")]
    Dimension(usize),

    #[error("cell ({x}, {y}) is a wall or out of bounds")]
    BlockedCell { x: usize, y: usize },

    #[error("maze has fewer than two open cells available for placement")]
    NoPlacement,

    #[error("step called on a terminal state")]
    TerminalState,

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("reconstruction value {0} outside (0, 1)")]
    ReconRange(f64),

    #[error("replay buffer is empty")]
    EmptyBuffer,

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("malformed {format} data: {reason}")]
    Format { format: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn format(format: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            format,
            reason: reason.into(),
        }
    }
}
