use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid generator arguments: {0}")]
    InvalidGenerator(String),

    #[error("agent {0} has no neighbors; its influence row cannot be normalized")]
    IsolatedNode(usize),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("invalid population: {0}")]
    InvalidPopulation(String),

    #[error("mean stance is undefined: every agent is a Confederate")]
    NoNonConfederates,

    #[error("infeasible Confederate count {count} for {n} agents")]
    InfeasibleConfederates { count: usize, n: usize },

    #[error("tipping point analysis needs at least 3 percentage levels, got {0}")]
    TooFewLevels(usize),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        field,
        reason: reason.into(),
    }
}
