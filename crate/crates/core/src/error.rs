use thiserror::Error;

/// Errors produced by the search structures, predictors and simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("k = {k} exceeds the number of points n = {n}")]
    KTooLarge { k: usize, n: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("labels required for this operation")]
    MissingLabels,

    #[error("no comparable items (empty support)")]
    EmptySupport,

    #[error("time series not observable at step {step}")]
    Unobservable { step: i64 },

    #[error("degenerate hash family: P1 = {p1} must exceed P2 = {p2}")]
    DegenerateFamily { p1: f64, p2: f64 },

    #[error("every rung of the radius ladder came back empty")]
    LadderExhausted,

    #[error("nearest distance is zero; potential undefined")]
    DuplicateOfQuery,

    #[error("training set holds a single label")]
    SingleLabel,

    #[error("query falls in a region with no members")]
    EmptyRegion,

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("user {user} has no unconsumed items")]
    Exhausted { user: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
