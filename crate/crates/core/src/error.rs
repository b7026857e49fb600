use std::io;

use thiserror::Error;

/// Errors surfaced by the testbed library.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar fell outside its admissible interval.
    #[error("{what} = {value} outside [{lo}, {hi}]")]
    Range {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// A precondition on an operation's inputs was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An RL action would leave the discretized state grid.
    #[error("action {action} leaves the state grid from {state}")]
    InvalidAction { state: String, action: String },

    /// A persisted file (Q-table, raster, track) is malformed.
    #[error("format error: {0}")]
    Format(String),

    /// Configuration could not be parsed or is inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// No fog device is registered or none has ping history.
    #[error("fog selection failed: {0}")]
    Selection(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
