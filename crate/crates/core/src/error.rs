use thiserror::Error;

#[derive(Debug, Error)]
pub enum KlbError {
    /// The requested enumeration would run more programs than the ceiling allows.
    #[error("search of {requested} programs exceeds the ceiling of {ceiling}")]
    CapExceeded { requested: u128, ceiling: u64 },

    /// An exhaustive rectangle audit would exceed its combinatorial ceiling.
    #[error("exhaustive audit needs {requested} rectangles, ceiling is {ceiling}")]
    AuditCeilingExceeded { requested: u128, ceiling: u64 },

    #[error("no program of length <= {max_len} outputs the {target_len}-bit target")]
    NoProgramWithinCap { target_len: usize, max_len: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("prefix of length {requested} is beyond the source horizon {horizon}")]
    HorizonExceeded { requested: usize, horizon: usize },

    #[error("empty profile")]
    EmptyProfile,

    #[error("stage budget {budget} exhausted before the first {n} bits converged")]
    StageBudgetExhausted { budget: usize, n: usize },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, KlbError>;
