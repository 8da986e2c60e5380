use thiserror::Error;

/// Crate-wide error type. The CLI maps categories to exit codes
/// (validation 2, budget 3, invariant 4).
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data: bad matching, bad table row, bad pattern file.
    #[error("{0}")]
    Validation(String),

    /// Parse failure in a text input, with 1-based line number.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// The enumeration touched more embeddings than the configured budget.
    #[error("budget exceeded: more than {budget} embeddings required")]
    Budget { budget: u64 },

    /// A window touches the line pattern in a degenerate way.
    #[error("degenerate window: {0}")]
    Degenerate(String),

    /// Internal consistency check failed; indicates a bug, not bad input.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    /// Process exit code for the CLI: validation-like errors 2, budget 3,
    /// invariant 4.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Parse { .. } | Error::Degenerate(_) => 2,
            Error::Budget { .. } => 3,
            Error::Invariant(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
