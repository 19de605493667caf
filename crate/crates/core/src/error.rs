use alloc::string::String;
use core::fmt;

/// Errors produced by validation and calibration routines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Operand shapes do not conform (matrix products, batch widths, ...).
    ShapeMismatch(String),
    /// An argument violates a documented precondition.
    Validation(String),
    /// The model cannot be used with the requested engine
    /// (e.g. more than 64 leaves per tree for the bitvector scorer).
    UnsupportedModel(String),
    /// Timing-based calibration produced unusable coefficients.
    CalibrationFailed(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Error::Validation(msg) => write!(f, "validation error: {msg}"),
            Error::UnsupportedModel(msg) => write!(f, "unsupported model: {msg}"),
            Error::CalibrationFailed(msg) => write!(f, "calibration failed: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
