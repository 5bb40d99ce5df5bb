use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An operation refused to start because its estimated work exceeds the
    /// configured budget. The message carries guidance on what to use instead.
    #[error("work budget exceeded: estimated {needed} units, budget {budget}; {hint}")]
    BudgetExceeded {
        needed: u128,
        budget: u128,
        hint: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
