use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the region where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Structurally invalid input (unsorted grids, malformed configs, ...).
    #[error("invalid input: {0}")]
    Input(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    /// The request exceeds a guard on an exhaustive or statistical routine.
    #[error("refused: {0}")]
    Refused(String),

    /// A branching process kept growing past the individual cap.
    #[error("branching process exceeded {cap} individuals (supercritical parameters?)")]
    Runaway { cap: u64 },

    #[error("sizing error: {0}")]
    Sizing(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}
