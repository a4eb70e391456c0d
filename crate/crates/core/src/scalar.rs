//! Scalar abstraction for the numeric core.
//!
//! Every filter, builder, and estimator in this crate is generic over
//! [`Scalar`]: a real field with primitive conversions, i.e. `f32` or
//! `f64` in practice. Concrete `f64` aliases live at the crate root.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar type usable by every algorithm in this crate.
pub trait Scalar: RealField + Copy + FromPrimitive + ToPrimitive {}

impl<T> Scalar for T where T: RealField + Copy + FromPrimitive + ToPrimitive {}

/// Converts an `f64` constant into `T`.
#[inline]
pub(crate) fn cast<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("constant must be representable in the scalar type")
}

/// `true` when `x` is neither NaN nor infinite.
#[inline]
pub(crate) fn is_finite<T: Scalar>(x: T) -> bool {
    x.to_f64().is_some_and(f64::is_finite)
}
