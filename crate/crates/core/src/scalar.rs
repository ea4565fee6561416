//! Scalar abstraction for the numeric kernels.
//!
//! Everything in this crate is generic over [`Scalar`], which is implemented
//! for `f32` and `f64`. The concrete aliases at the crate root pick `f64`,
//! which is what all calibrated tolerances and the CLI assume.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the attention kernels and caches.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Logical width of one stored scalar, in bytes.
    ///
    /// Memory accounting throughout the crate multiplies stored-scalar counts
    /// by this width, ignoring allocator overhead.
    const LOGICAL_BYTES: u64;

    /// Lossy conversion from `f64`, used when seeding generic structures from
    /// the `f64`-native random generators.
    fn from_f64_lossy(value: f64) -> Self;
}

impl Scalar for f32 {
    const LOGICAL_BYTES: u64 = 4;

    #[inline]
    fn from_f64_lossy(value: f64) -> Self {
        value as f32
    }
}

impl Scalar for f64 {
    const LOGICAL_BYTES: u64 = 8;

    #[inline]
    fn from_f64_lossy(value: f64) -> Self {
        value
    }
}

/// Dot product of two equal-length slices.
#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b.iter()) {
        acc += x * y;
    }
    acc
}

/// Squared Euclidean distance between two equal-length slices.
#[inline]
pub(crate) fn dist_sq<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b.iter()) {
        let diff = x - y;
        acc += diff * diff;
    }
    acc
}

/// Euclidean norm of a slice.
#[inline]
pub(crate) fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
