//! Floating point abstraction shared by every numerical routine in the crate.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Real scalar used throughout the solver.
///
/// Implemented for `f32` and `f64`. Tolerances written as `f64` literals are
/// converted with [`Scalar::tol`], which never goes below a small multiple of
/// machine epsilon so the same checks remain meaningful in single precision.
pub trait Scalar:
    'static
    + Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
{
    /// Converts an `f64` constant. Panics only for non-representable input,
    /// which cannot happen for the finite literals used in this crate.
    #[inline]
    fn c(v: f64) -> Self {
        Self::from_f64(v).expect("finite constant")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).unwrap_or_else(Self::infinity)
    }

    /// A tolerance of at least `v`, floored at `64 * epsilon`.
    #[inline]
    fn tol(v: f64) -> Self {
        Self::c(v).max(Self::epsilon() * Self::c(64.0))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `log2(n + 2)`: the logarithm used in every `(log n)^a` factor, shifted so
/// that it stays at least 1 for tiny dimensions.
pub fn log_factor<T: Scalar>(n: usize) -> T {
    T::from_usize_lossy(n + 2).log2()
}

/// Number of squaring levels `K = ceil(10 * log2(n + 2))`.
pub fn squaring_levels(n: usize) -> usize {
    (10.0 * ((n + 2) as f64).log2()).ceil() as usize
}
