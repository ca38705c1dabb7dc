//! Scalar abstraction for the numeric core.
//!
//! Everything in this crate is generic over [`Scalar`]: an IEEE float with
//! the `num-traits` capabilities the math needs plus the per-precision
//! tolerances used by validation. `f64` is the default precision (the CLI
//! and all shipped fixtures use it); `f32` is available for callers that
//! want a smaller footprint and accept looser tolerances.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar usable by the value types and engines.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Tolerance for probability vectors summing to one. Vectors within
    /// this tolerance are renormalized silently, anything worse is rejected.
    const PROB_TOL: Self;

    /// Relative tolerance for covariance symmetry checks.
    const SYM_TOL: Self;

    /// Most negative (scale-relative) eigenvalue accepted when validating
    /// a covariance as positive semidefinite. Eigenvalues between the floor
    /// and zero are clamped to zero; anything below the floor is an error.
    const EIG_FLOOR: Self;
}

impl Scalar for f64 {
    const PROB_TOL: Self = 1e-9;
    const SYM_TOL: Self = 1e-12;
    const EIG_FLOOR: Self = -1e-10;
}

impl Scalar for f32 {
    const PROB_TOL: Self = 1e-4;
    const SYM_TOL: Self = 1e-6;
    const EIG_FLOOR: Self = -1e-4;
}

/// Converts an `f64` constant into the scalar type.
///
/// Panics if the value does not convert, which cannot happen for finite
/// inputs and the provided `f32`/`f64` impls.
pub fn cast<T: Scalar>(value: f64) -> T {
    T::from_f64(value).expect("finite f64 constant must convert into the scalar type")
}

/// Lossy view of a scalar for error reporting.
pub(crate) fn lossy<T: Scalar>(value: T) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}
