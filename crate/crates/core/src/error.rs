use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("oversize object: crown {crown} touches edges {edges}")]
    OversizeObject { crown: usize, edges: String },

    #[error("model domain error: {0}")]
    ModelDomain(String),

    #[error("degrees of freedom error: {0}")]
    DegreesOfFreedom(String),

    #[error("singular mixture component: {0}")]
    SingularComponent(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("manifest error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn protocol(msg: impl Into<String>) -> Self {
        Error::Protocol(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::ModelDomain(_)
            | Error::DegreesOfFreedom(_)
            | Error::SingularComponent(_)
            | Error::OversizeObject { .. } => 2,
            Error::Protocol(_) | Error::Transport(_) => 3,
            Error::Io(_) | Error::Parse { .. } | Error::Format(_) | Error::Json(_) | Error::Csv(_) => 4,
        }
    }
}
