use thiserror::Error;

use crate::spatial_index::NodeId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid rectangle: {0}")]
    InvalidRect(String),

    #[error("scenario parse error: {0}")]
    Parse(String),

    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("node {0} is already indexed")]
    DuplicateId(NodeId),

    #[error("no index entry passes the filter")]
    EmptyAfterFilter,

    #[error("robot and obstacle positions coincide")]
    CoincidentPoints,

    #[error("zero velocity has no direction")]
    ZeroVector,

    #[error("only {available} roadmap vertices are eligible for {requested} obstacles")]
    InsufficientVertices { available: usize, requested: usize },

    #[error("obstacle {0} has no observed velocity")]
    MissingObservation(usize),

    #[error("no path reaches the goal region")]
    NoPath,

    #[error("replan failed: {0}")]
    ReplanFailed(&'static str),

    #[error("start and goal are not connected")]
    Disconnected,

    #[error("malformed {kind} at line {line}: {reason}")]
    Malformed {
        kind: &'static str,
        line: usize,
        reason: String,
    },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
