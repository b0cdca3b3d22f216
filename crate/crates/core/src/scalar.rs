//! Scalar abstraction shared by the estimator kernels.
//!
//! Estimators only need field arithmetic and an ordering, so they run on
//! `f32`, `f64` and exact rationals alike. The rational instance is what the
//! brute-force oracle tests use: with exact arithmetic the pairwise and
//! scalar-sum forms must agree bit for bit.

use std::fmt;

use num_rational::Ratio;
use num_traits::{Float, Num, Signed};

/// Real-number-like scalar accepted by the estimators.
pub trait Real: Copy + PartialOrd + fmt::Debug + Num + Signed + Send + Sync + 'static {
    /// Converts an observation count.
    fn from_count(n: usize) -> Self;

    /// Converts an `f64` parameter (such as a denominator); `None` when the
    /// value cannot be represented.
    fn from_f64(x: f64) -> Option<Self>;

    fn to_f64(self) -> f64;

    fn is_finite(self) -> bool;

    /// Relative band below zero that is attributed to rounding and clamped.
    /// Zero for exact types.
    fn rounding_tolerance() -> Self;

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

macro_rules! impl_real_float {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn from_count(n: usize) -> Self {
                n as $t
            }

            fn from_f64(x: f64) -> Option<Self> {
                let v = x as $t;
                Float::is_finite(v).then_some(v)
            }

            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn is_finite(self) -> bool {
                Float::is_finite(self)
            }

            fn rounding_tolerance() -> Self {
                <$t>::EPSILON * 1024.0
            }
        }
    };
}

impl_real_float!(f32);
impl_real_float!(f64);

impl Real for Ratio<i64> {
    fn from_count(n: usize) -> Self {
        Ratio::from_integer(i64::try_from(n).expect("count exceeds i64"))
    }

    fn from_f64(x: f64) -> Option<Self> {
        Ratio::approximate_float(x)
    }

    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }

    fn is_finite(self) -> bool {
        true
    }

    fn rounding_tolerance() -> Self {
        Ratio::from_integer(0)
    }
}
