use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("matrix is singular")]
    Singular,

    #[error("matrix is not positive definite (pivot {pivot} = {value:.3e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("Gamma has a pole at {0}")]
    GammaPole(Complex64),

    #[error("interlacing gap {gap:.3e} at level {level} is below the tolerance {tol:.3e}")]
    ConeViolation { level: usize, gap: f64, tol: f64 },

    #[error("angle undefined at level {level}, index {index}: |a| = {modulus:.3e}")]
    AngleUndefined { level: usize, index: usize, modulus: f64 },

    #[error("formula domain error in {what}: {value:.3e}")]
    FormulaDomain { what: &'static str, value: f64 },

    #[error("u is not strictly increasing (gap {gap:.3e} at position {index})")]
    ChamberViolation { index: usize, gap: f64 },

    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integration path passes too close to the origin")]
    PathThroughOrigin,

    #[error("formal series at infinity: {0}")]
    Series(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),
}
