//! Scalar abstractions.
//!
//! [`Exponent`] is an ordered field used for decay exponents. The exact
//! instance is [`crate::Rational`]; `f64` also implements it so the same
//! algorithms can run in floating point for quick exploration.
//!
//! [`Real`] is the floating-point type used by the numerical modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

pub trait Exponent:
    Clone + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync
{
    /// Exact ratio `p/q` (q != 0).
    fn ratio(p: i64, q: i64) -> Self {
        Self::from_i64(p).expect("integer fits") / Self::from_i64(q).expect("integer fits")
    }

    fn int(p: i64) -> Self {
        Self::from_i64(p).expect("integer fits")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Exponent for BigRational {}
impl Exponent for f64 {}

/// Converts an `f64` to the nearest rational with denominator at most `10^12`.
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_f64(x)
        .map(|r| {
            let den = BigInt::from(10i64.pow(12));
            let scaled = (r * BigRational::from_integer(den.clone())).round();
            scaled / BigRational::from_integer(den)
        })
        .unwrap_or_else(|| BigRational::from_integer(BigInt::from(0)))
}

pub trait Real: Float + FromPrimitive + Debug + Display + Sum + Send + Sync + 'static {
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("representable constant")
    }

    fn f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
