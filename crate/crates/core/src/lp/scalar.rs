//! Field abstraction for the simplex core.
//!
//! The solver runs either in `f64` with tolerances or in exact
//! [`BigRational`] arithmetic where every comparison is exact.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};

pub trait Scalar:
    Num + Signed + Clone + PartialOrd + Debug + Display + Send + Sync + 'static
{
    /// True when arithmetic is exact and all tolerances are zero.
    const EXACT: bool;

    /// Smallest magnitude accepted as a pivot element.
    fn pivot_tol() -> Self;
    /// Tolerance for primal bound violations.
    fn feas_tol() -> Self;
    /// Tolerance for reduced-cost optimality.
    fn opt_tol() -> Self;

    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;

    /// Strict sign tests (`Signed::is_positive` treats `+0.0` as positive).
    fn positive(&self) -> bool {
        *self > Self::zero()
    }
    fn negative(&self) -> bool {
        *self < Self::zero()
    }

    fn is_pos(&self) -> bool {
        *self > Self::feas_tol()
    }
    fn is_neg(&self) -> bool {
        *self < -Self::feas_tol()
    }
    fn near_zero(&self) -> bool {
        !self.is_pos() && !self.is_neg()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn pivot_tol() -> Self {
        1e-9
    }
    fn feas_tol() -> Self {
        1e-9
    }
    fn opt_tol() -> Self {
        1e-9
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn pivot_tol() -> Self {
        BigRational::zero()
    }
    fn feas_tol() -> Self {
        BigRational::zero()
    }
    fn opt_tol() -> Self {
        BigRational::zero()
    }
    /// Exact conversion: every finite double is a dyadic rational.
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite value")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            // numerator/denominator too large for a direct conversion
            let n = self.numer().to_f64().unwrap_or(f64::NAN);
            let d = self.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
    }
}

/// Exact rational from a small integer pair.
pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Largest absolute value in a slice, zero when empty.
pub fn max_abs<T: Scalar>(xs: &[T]) -> T {
    xs.iter()
        .map(|x| x.abs())
        .fold(T::zero(), |acc, x| if x > acc { x } else { acc })
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn to_f64_vec<T: Scalar>(xs: &[T]) -> Vec<f64> {
    xs.iter().map(Scalar::to_f64).collect()
}

pub fn from_f64_vec<T: Scalar>(xs: &[f64]) -> Vec<T> {
    xs.iter().map(|&x| T::from_f64(x)).collect()
}
