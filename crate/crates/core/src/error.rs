use thiserror::Error;

/// Errors raised by model evaluation, constraint construction and filtering.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("bicycle model requires a rear-axle geometry")]
    MissingGeometry,

    #[error("rear-axle distance must be strictly positive, got {0}")]
    InvalidGeometry(f64),

    #[error("barrier radius must be strictly positive, got {0}")]
    InvalidRadius(f64),

    #[error("prescribed time must be strictly positive, got {0}")]
    NonPositiveTime(f64),

    #[error("initial barrier value is exactly zero; the fixed-time rate is undefined")]
    ZeroInitialBarrier,

    #[error("initial barrier value {0} is already non-negative; use the exponential constraint")]
    AlreadySafe(f64),

    #[error("exponent {0} must lie strictly between 0 and 1")]
    ExponentOutOfRange(f64),

    #[error("parameter `{name}` is invalid: {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("constraint row has zero input coefficient but requires {bound} > 0")]
    Infeasible { bound: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
