use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, QlabError>;

#[derive(Debug, Error)]
pub enum QlabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("point {0} lies outside the evaluable domain")]
    OutOfDomain(Complex64),

    #[error("grid too small: need at least {min} samples per axis, got {nx}x{ny}")]
    GridTooSmall { min: usize, nx: usize, ny: usize },

    #[error("field is not negligible outside the inner half-box (max modulus {max_outside:e})")]
    SupportViolation { max_outside: f64 },

    #[error("invalid dilatation: sup norm {k} is not below 1")]
    InvalidDilatation { k: f64 },

    #[error("Beltrami iteration did not converge in {max_iter} iterations (last relative step {last:e})")]
    NoConvergence { max_iter: usize, last: f64 },

    #[error("point is within {distance:e} of the curve, closer than the sample-spacing guard {guard:e}")]
    NearCurve { distance: f64, guard: f64 },

    #[error("tail terms of the boundary function do not cancel (mismatch {mismatch:e})")]
    TailDivergence { mismatch: f64 },

    #[error("jump identity failed: |g+ - g- - g| = {defect:e} exceeds {tolerance:e}")]
    JumpMismatch { defect: f64, tolerance: f64 },

    #[error("value {value} outside the tabulated range [{lo}, {hi}]")]
    RangeError { value: f64, lo: f64, hi: f64 },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("derivative vanishes at {0}")]
    DegenerateDerivative(Complex64),

    #[error("point {0} lies outside the extension annulus")]
    OutOfAnnulus(Complex64),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
