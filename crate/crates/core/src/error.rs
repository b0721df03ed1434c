use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("family mismatch: {0}")]
    FamilyMismatch(String),

    #[error("length function is not proper on this family: {0}")]
    NotProper(String),

    #[error("cardinality budget exceeded: {needed} > {budget}")]
    Budget { needed: u128, budget: usize },

    #[error("tower prefix too short: level {level} requested, {known} known")]
    TowerTooShort { level: usize, known: usize },

    #[error("cocycle validation failed: {0}")]
    Cocycle(String),

    #[error("combinator is not monotone: {0}")]
    NonMonotone(String),

    #[error("scale function on coset is not constant: {0}")]
    CosetNotConstant(String),

    #[error("linear program: {0}")]
    Lp(String),

    #[error("seminorm is degenerate (kernel larger than constants)")]
    Degenerate,

    #[error("vertex enumeration budget exceeded ({0} rays)")]
    VertexBudget(usize),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation error in `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
