use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Error type shared by every operation in the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two operands have incompatible shapes; both are reported.
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    /// Row partitions disagree; both partition vectors are reported.
    PartitionMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    /// Input contains NaN or infinite entries.
    NonFinite { op: &'static str },
    /// Operation is undefined for an (effectively) zero matrix.
    ZeroMatrix { op: &'static str },
    /// Cholesky hit a non-positive pivot; the pivot index is reported.
    NotPositiveDefinite { pivot: usize },
    /// A matrix that must have orthonormal columns does not; the measured
    /// Frobenius deviation of its Gram matrix from the identity is reported.
    NotOrthonormal { deviation: f64 },
    /// An iteration exhausted its budget; `gap` is the last relative change.
    NotConverged { op: &'static str, gap: f64 },
    /// Catch-all for parameter validation failures.
    InvalidArgument { op: &'static str, reason: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch { op, left, right } => write!(
                f,
                "{op}: shape mismatch, left is {}x{}, right is {}x{}",
                left.0, left.1, right.0, right.1
            ),
            Error::PartitionMismatch { expected, found } => write!(
                f,
                "row partition mismatch: expected {expected:?}, found {found:?}"
            ),
            Error::NonFinite { op } => write!(f, "{op}: input has non-finite entries"),
            Error::ZeroMatrix { op } => write!(f, "{op}: undefined for zero matrix"),
            Error::NotPositiveDefinite { pivot } => {
                write!(f, "matrix not positive definite (pivot {pivot})")
            }
            Error::NotOrthonormal { deviation } => write!(
                f,
                "matrix does not have orthonormal columns (deviation {deviation:.3e})"
            ),
            Error::NotConverged { op, gap } => {
                write!(f, "{op}: did not converge (last gap {gap:.3e})")
            }
            Error::InvalidArgument { op, reason } => write!(f, "{op}: {reason}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
