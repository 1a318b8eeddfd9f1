//! Numeric abstraction shared by the feature, histogram and learning code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type the numeric pipeline is generic over.
///
/// Implemented for `f32` and `f64`. Counts and entropies are always carried
/// in `f64`; only signal values, feature values, histogram bars and point
/// coordinates use the generic scalar.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for literal constants.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    /// Conversion from a count.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count is representable in every Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Total order on finite values; NaN sorts last.
pub(crate) fn total_cmp<T: Scalar>(a: &T, b: &T) -> std::cmp::Ordering {
    a.partial_cmp(b)
        .unwrap_or_else(|| a.is_nan().cmp(&b.is_nan()))
}
