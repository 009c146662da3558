//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All metrics, distances, kernels and eigen-computations are written against
//! [`Scalar`] so the same code runs in `f32` or `f64`. Counts stay integral
//! until the final ratio is formed, which keeps batch and pointwise evaluation
//! bit-identical.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real floating-point type usable throughout the crate.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Residual tolerance used by the iterative eigensolver.
    fn solver_tolerance() -> Self;

    /// Relative tolerance under which two scores are reported as tied.
    fn tie_tolerance() -> Self;

    #[inline]
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable as float")
    }

    #[inline]
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn solver_tolerance() -> Self {
        1e-10
    }

    fn tie_tolerance() -> Self {
        1e-6
    }
}

impl Scalar for f32 {
    fn solver_tolerance() -> Self {
        2e-5
    }

    fn tie_tolerance() -> Self {
        1e-3
    }
}
