use thiserror::Error;

/// Errors raised by the numerical layers.
///
/// Magnitudes are carried as `f64` regardless of the scalar type in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("singular divisor: |value| = {modulus:e}")]
    SingularDivisor { modulus: f64 },

    #[error("singular argument for {func}: |value| = {modulus:e}")]
    SingularArgument { func: &'static str, modulus: f64 },

    #[error("singular point: denominator value {re:e}{im:+e}i")]
    SingularPoint { re: f64, im: f64 },

    #[error("singular Jacobian: |det| = {modulus:e}")]
    SingularJacobian { modulus: f64 },

    #[error("Cauchy contour leaves the domain of holomorphy (radius {radius:e}): {reason}")]
    ContourRadius { radius: f64, reason: String },

    #[error("point outside the open polydisk: |z|_inf = {norm:e}")]
    OutsidePolydisk { norm: f64 },

    #[error("map is not normalized at the origin: {0}")]
    NotNormalized(String),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
