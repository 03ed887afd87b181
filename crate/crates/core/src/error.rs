use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Inputs violate a structural precondition (shapes, ranges, duplicates).
    #[error("validation error: {0}")]
    Validation(String),
    /// A rule received values outside the domain it is defined on.
    #[error("domain error: {0}")]
    Domain(String),
    /// A rule produced a non-finite value.
    #[error("numeric error at node {node}: {message}")]
    Numeric { node: usize, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("estimation error: {0}")]
    Estimation(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("generation error: {0}")]
    Generation(String),
    #[error("distillation aborted: {0}")]
    Distill(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn parse(line: usize, column: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: msg.into(),
        }
    }
}
