use thiserror::Error;

/// Errors raised by the solver and evaluators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The gap is too small relative to the radius for binary64 to resolve the frame.
    #[error("ill-conditioned configuration: eps/r = {ratio:e} is below {limit:e}")]
    Conditioning { ratio: f64, limit: f64 },

    #[error("truncation order would exceed the cap of {cap} (eps/tol combination infeasible)")]
    TruncationCap { cap: usize },

    #[error("point ({x}, {y}) lies inside inclusion D{which}")]
    InsideInclusion { x: f64, y: f64, which: u8 },

    #[error("|zeta| = {modulus} lies outside the closed annulus [{inner}, {outer}]")]
    AnnulusDomain { modulus: f64, inner: f64, outer: f64 },

    #[error("evaluation at the singular point zeta = 1")]
    SingularPoint,

    #[error("index {index} outside the admissible range {lo}..={hi}")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },

    #[error("dense oracle of size {size} exceeds the memory guard {max}")]
    OracleTooLarge { size: usize, max: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Checks that `value` is finite and strictly positive.
pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

pub(crate) fn require_nonnegative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(invalid(name, format!("must be finite and >= 0, got {value}")))
    }
}
