use thiserror::Error;

/// Errors produced anywhere in the crate.
///
/// Agent and coalition indices inside messages are 1-based.
#[derive(Debug, Error)]
pub enum PocfError {
    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid action for agent {agent}: {reason}")]
    InvalidAction { agent: usize, reason: String },

    #[error("invalid mixed profile for agent {agent}: {reason}")]
    InvalidProfile { agent: usize, reason: String },

    #[error("invalid exploration policy: {0}")]
    InvalidPolicy(String),

    #[error("enumeration budget exceeded ({size} joint actions > {budget}); use Monte Carlo mode")]
    BudgetExceeded { size: u128, budget: u128 },

    #[error("expected {expected} feedback but the dataset carries {found} feedback")]
    FeedbackMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("better-response dynamics exceeded the step guard of {0}")]
    StepGuard(u64),

    #[error("trend undefined: {0}")]
    TrendUndefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, PocfError>;
