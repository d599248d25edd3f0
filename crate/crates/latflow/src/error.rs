use thiserror::Error;

/// Crate-wide error type. The CLI maps variants to exit codes:
/// validation 2, resource 3, statistical 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),

    #[error("resource budget exceeded: {what} (bound reached: {bound})")]
    Resource { what: String, bound: String },

    #[error("statistical check failed: {0}")]
    Statistical(String),

    #[error("parse: {0}")]
    Parse(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn resource(what: impl Into<String>, bound: impl ToString) -> Self {
        Error::Resource {
            what: what.into(),
            bound: bound.to_string(),
        }
    }

    /// Exit code for the CLI contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Parse(_) => 2,
            Error::Resource { .. } => 3,
            Error::Statistical(_) => 4,
            Error::Io(_) | Error::Json(_) => 1,
        }
    }
}
