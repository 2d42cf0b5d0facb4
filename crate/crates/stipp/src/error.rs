//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Kernel or model hyperparameters outside their valid domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A matrix factorization failed; names the offending matrix.
    #[error("numerical failure: {matrix} is not positive definite")]
    Factorization { matrix: String },

    /// Paired vectors of different lengths.
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// A variance that must be strictly positive was not.
    #[error("non-positive variance {value} at index {index}")]
    NonPositiveVariance { index: usize, value: f64 },

    /// An operation that needs at least one element got none.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Explicit time step violates the advection-diffusion stability bound.
    #[error("unstable step: dt = {dt} exceeds stability bound {bound}")]
    UnstableStep { dt: f64, bound: f64 },

    /// Field file header could not be parsed.
    #[error("line {line}: malformed header: {msg}")]
    MalformedHeader { line: usize, msg: String },

    /// A frame block disagrees with the header's declared shape.
    #[error("line {line}: inconsistent frame: {msg}")]
    InconsistentFrame { line: usize, msg: String },

    /// Frame times must be strictly increasing with constant spacing.
    #[error("line {line}: non-monotone frame time {time}")]
    NonMonotoneTime { line: usize, time: f64 },

    /// Query point outside the field's spatial extent or time range.
    #[error("point ({x}, {y}, {t}) outside field domain")]
    OutOfBounds { x: f64, y: f64, t: f64 },

    /// Sampling touched a masked (NaN) raster cell.
    #[error("masked cell at ({x}, {y})")]
    MaskedCell { x: f64, y: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
