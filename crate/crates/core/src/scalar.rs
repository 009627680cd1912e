//! Generic scalar abstraction for the numerical core.
//!
//! Everything downstream (matrices, integrators, Riccati limits) is written
//! against [`Real`] so the same code runs in `f32` or `f64`. The shipped
//! tolerances assume `f64`; `f32` is supported for quick smoke runs.

use std::fmt::{Debug, Display};
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Floating-point scalar used throughout the crate.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` constant (tolerances, literals) into the working scalar.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("constant representable in scalar type")
}

/// Converts a `usize` (dimensions, counts) into the working scalar.
#[inline]
pub fn real_of_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

/// Scale factor for tolerance checks: absolute below magnitude one,
/// relative above (`max(1, |x|)`).
#[inline]
pub fn rel_scale<T: Real>(x: T) -> T {
    x.abs().max(T::one())
}
