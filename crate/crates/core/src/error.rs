//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A point or table cannot be resolved at the requested generation.
    #[error("precision error: {0}")]
    Precision(String),

    /// A parameter lies outside the domain of the operation.
    #[error("parameter error in {op}: {msg}")]
    Parameter { op: &'static str, msg: String },

    /// A cube does not belong to the construction it was paired with.
    #[error("construction mismatch: {0}")]
    ConstructionMismatch(String),

    /// Materializing would exceed the memory budget.
    #[error("capacity error: {what} needs {required} entries but the budget is {budget}")]
    Capacity {
        what: String,
        required: String,
        budget: u64,
    },

    #[error("no positivity certificate found up to generation {0}")]
    CertificateNotFound(u32),

    #[error("regularity gate: {0}")]
    RegularityGate(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("insufficient levels: need at least {need}, got {got}")]
    InsufficientLevels { need: usize, got: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(op: &'static str, msg: impl Into<String>) -> Error {
    Error::Parameter {
        op,
        msg: msg.into(),
    }
}
