use alloc::string::String;
use chrono::NaiveDate;

/// Errors raised by the estimation and risk routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("non-positive price at row {row}")]
    NonPositivePrice { row: usize },
    #[error("duplicate date {date}")]
    DuplicateDate { date: NaiveDate },
    #[error("dates not strictly increasing at index {index}")]
    UnorderedDates { index: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("degenerate: zero variance")]
    ZeroVariance,
    #[error("empty calendar intersection")]
    EmptyIntersection,
    #[error("need at least {needed} series, got {got}")]
    TooFewSeries { needed: usize, got: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("calendars of the input fits differ")]
    CalendarMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("probability {0} outside (0, 1)")]
    InvalidProbability(f64),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("objective is not finite at the starting point")]
    NonFiniteStart,
    #[error("point violates constraint on `{name}`")]
    ConstraintViolation { name: String },
    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },
    #[error("diagonal is identically one; use i != j")]
    DiagonalRequested,
    #[error("period `{0}` is empty after restriction")]
    EmptyPeriod(String),
}

pub type Result<T> = core::result::Result<T, Error>;
