use thiserror::Error;

/// Errors raised by the library. The CLI maps each variant onto an exit code.
#[derive(Debug, Error)]
pub enum HlError {
    /// A mathematical precondition failed, e.g. `|1/p| >= 1`.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index range {lo}..{hi} is invalid for m = {m}")]
    Range { lo: usize, hi: usize, m: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("enumeration budget exceeded: 2^{needed_log2} > 2^{budget_log2}")]
    BudgetExceeded { needed_log2: u32, budget_log2: u32 },

    /// A file did not match the expected schema; `field` names the offending key.
    #[error("schema error in field \"{field}\": {message}")]
    Schema { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, HlError>;

impl HlError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        HlError::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        HlError::InvalidArgument(msg.into())
    }

    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        HlError::Schema {
            field: field.into(),
            message: message.into(),
        }
    }
}
