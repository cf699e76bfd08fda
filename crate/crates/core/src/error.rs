use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: String,
        expected: usize,
        got: usize,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical failure in {what} after {iterations} iterations")]
    Numerical { what: String, iterations: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("subproblem failure in block {block}: {reason}")]
    Step { block: &'static str, reason: String },
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            context: context.to_string(),
            expected,
            got,
        })
    }
}
