use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("coloring does not cover vertex {0}")]
    MissingAssignment(usize),

    #[error("improper coloring: {0} conflicting edges")]
    ImproperColoring(usize),

    #[error("{0} is not a permutation of the users")]
    NotAPermutation(String),

    #[error("K = {users} exceeds the {method} limit of {limit}{hint}")]
    TooManyUsers {
        users: usize,
        limit: usize,
        method: &'static str,
        hint: &'static str,
    },

    #[error("unsupported schema version {0}")]
    UnsupportedSchema(u32),

    #[error("malformed document: {0}")]
    Document(String),

    #[error("decode failed for user {user} at packet {packet}")]
    DecodeFailure { user: usize, packet: usize },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
