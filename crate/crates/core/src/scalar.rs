//! Floating-point scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable by the formation algorithms: `f32` or `f64`.
///
/// Tolerance defaults throughout the crate are tuned for `f64`; `f32` works
/// for simulation and Hessian assembly but needs looser thresholds.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + FromStr + Display + Debug + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("scalar converts to f64")
    }

    #[inline]
    fn count(n: usize) -> Self {
        Self::lit(n as f64)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Maximum absolute entry of a slice (zero when empty).
pub(crate) fn sup_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}
