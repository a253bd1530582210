//! Scalar abstraction for the numeric core.
//!
//! Every matrix kernel and learning routine is generic over [`Scalar`], a
//! small extension of `num_traits::Float`. `f64` is the working type for
//! anything with pinned tolerances; `f32` is supported with loosened
//! tolerances scaled to its epsilon.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the numeric core.
///
/// The tolerance methods centralize the magic numbers of the library: the
/// symmetry check and the positive-definiteness eigenvalue-ratio test.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Relative tolerance for the symmetry check at matrix construction.
    fn symmetry_tol() -> Self;

    /// A matrix is accepted as positive definite when its smallest
    /// eigenvalue exceeds this fraction of the largest.
    fn pd_ratio_tol() -> Self;

    /// Lossy conversion from `f64`; panics only on values outside the
    /// type's range, which no caller produces.
    fn from_f64v(x: f64) -> Self {
        Self::from_f64(x).expect("f64 value not representable in scalar type")
    }

    /// Lossy conversion to `f64` for serialization.
    fn to_f64v(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }
}

impl Scalar for f64 {
    fn symmetry_tol() -> Self {
        1e-10
    }

    fn pd_ratio_tol() -> Self {
        1e-10
    }
}

impl Scalar for f32 {
    fn symmetry_tol() -> Self {
        1e-5
    }

    fn pd_ratio_tol() -> Self {
        1e-6
    }
}
