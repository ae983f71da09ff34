use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the framework.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid action {action} (environment has {num_actions} actions)")]
    InvalidAction { action: usize, num_actions: usize },

    #[error("episode already finished; call reset before stepping")]
    EpisodeFinished,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid network layout: {0}")]
    InvalidLayout(String),

    #[error("non-finite value encountered during training ({0})")]
    Divergence(&'static str),

    #[error("episode buffer chain broken at position {position}")]
    BrokenChain { position: usize },

    #[error("episode buffer already holds a terminated record")]
    EpisodeClosed,

    #[error("cannot sample from an empty buffer")]
    EmptyBuffer,

    #[error("episode was not terminated; no danger signal available")]
    NotTerminated,

    #[error("config file not found: {0}")]
    ConfigMissing(PathBuf),

    #[error("config schema violation: {0}")]
    ConfigSchema(String),

    #[error("config value out of range for `{field}`: {reason}")]
    ConfigRange { field: &'static str, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid grid request: {0}")]
    InvalidGrid(String),

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-readable category used for CLI exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidAction { .. } | Error::EpisodeFinished => "env",
            Error::DimensionMismatch { .. } | Error::InvalidLayout(_) => "shape",
            Error::Divergence(_) => "divergence",
            Error::BrokenChain { .. }
            | Error::EpisodeClosed
            | Error::EmptyBuffer
            | Error::NotTerminated => "memory",
            Error::ConfigMissing(_) => "config-missing",
            Error::ConfigSchema(_) => "config-schema",
            Error::ConfigRange { .. } => "config-range",
            Error::InvalidArgument(_) => "argument",
            Error::InvalidGrid(_) => "grid",
            Error::Checkpoint(_) => "checkpoint",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
