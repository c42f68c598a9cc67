use thiserror::Error;

use crate::independence::CiStatement;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {vertex} out of range 1..={m}")]
    VertexOutOfRange { vertex: usize, m: usize },

    #[error("invalid DAG: {0}")]
    InvalidDag(String),

    #[error("invalid statement: {0}")]
    InvalidStatement(String),

    #[error("dimension mismatch: expected {expected} variables, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what}: requested {requested}, ceiling is {ceiling}")]
    Ceiling {
        what: &'static str,
        requested: usize,
        ceiling: usize,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("DAG is not Markovian to the model: {violating} is entailed but does not hold")]
    NotMarkovian { violating: CiStatement },

    #[error("edge {j} -> {k} is not covered: {reason}")]
    NotCovered { j: usize, k: usize, reason: String },

    #[error("invalid probability table: {0}")]
    InvalidTable(String),

    #[error("invalid range specification: {0}")]
    InvalidRanges(String),

    #[error("parametric razor {0} requires a range specification")]
    MissingRanges(&'static str),

    #[error("unknown catalog entry `{id}`; known: {known}")]
    UnknownExample { id: String, known: String },

    #[error("search failed: {0}")]
    SearchFailed(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
