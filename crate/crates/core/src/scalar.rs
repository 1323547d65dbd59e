//! Scalar abstractions shared by the benchmark formulas and the statistics.
//!
//! Closed-form equilibrium formulas only need field arithmetic, so they are
//! written against [`Scalar`] and run unchanged on `f64`, `f32` or exact
//! rationals. Anything that needs `sqrt`, `exp` or comparisons against a
//! tolerance is written against [`Real`].

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};
use std::fmt::Debug;

/// Field-like scalar: enough for `(n-1)/n * v` style formulas.
pub trait Scalar: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug {
    fn from_u64(x: u64) -> Self {
        <Self as FromPrimitive>::from_u64(x).expect("integer fits scalar")
    }

    fn from_i64(x: i64) -> Self {
        <Self as FromPrimitive>::from_i64(x).expect("integer fits scalar")
    }

    fn pow(self, exp: u32) -> Self {
        num_traits::pow(self, exp as usize)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
impl Scalar for Ratio<i64> {}
impl Scalar for Ratio<i128> {}

/// Floating-point scalar used by Monte Carlo estimators and statistics.
pub trait Real: Scalar + Float + Send + Sync + 'static {
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite float")
    }

    fn of_usize(x: usize) -> Self {
        <Self as FromPrimitive>::from_usize(x).expect("count fits float")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Exact rational with 64-bit parts.
pub type Rational = Ratio<i64>;
