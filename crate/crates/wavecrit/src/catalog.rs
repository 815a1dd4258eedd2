//! Closed-form critical exponents and curves.
//!
//! Irrational exponents are kept exact as `p + q√r`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::scalar::Exponent;

/// `p + q √r` with `r >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadSurd<T> {
    pub p: T,
    pub q: T,
    pub r: T,
}

impl<T: Exponent> QuadSurd<T> {
    pub fn rational(p: T) -> Self {
        Self { p, q: T::zero(), r: T::zero() }
    }

    /// Exact comparison of `self` with a rational `x`.
    pub fn cmp_rational(&self, x: &T) -> Ordering {
        let d = self.p.clone() - x.clone();
        let sd = sign(&d);
        let sq = if self.r.is_zero() { 0 } else { sign(&self.q) };
        match (sd, sq) {
            (0, 0) => Ordering::Equal,
            (a, b) if a >= 0 && b >= 0 => Ordering::Greater,
            (a, b) if a <= 0 && b <= 0 => Ordering::Less,
            _ => {
                let lhs = d.clone() * d;
                let rhs = self.q.clone() * self.q.clone() * self.r.clone();
                match lhs.partial_cmp(&rhs).expect("ordered field") {
                    Ordering::Greater => if sd > 0 { Ordering::Greater } else { Ordering::Less },
                    Ordering::Less => if sq > 0 { Ordering::Greater } else { Ordering::Less },
                    Ordering::Equal => Ordering::Equal,
                }
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.p.to_f64_lossy() + self.q.to_f64_lossy() * self.r.to_f64_lossy().sqrt()
    }
}

impl QuadSurd<BigRational> {
    /// Same value with `r` a square-free integer, or `r = 0` when rational.
    pub fn simplified(&self) -> Self {
        if self.q.is_zero() || self.r.is_zero() {
            return Self::rational(self.p.clone());
        }
        // sqrt(a/b) = sqrt(a b) / b
        let m = self.r.numer() * self.r.denom();
        let (outer, inner) = split_square(m);
        let q = self.q.clone() * BigRational::new(outer, self.r.denom().clone());
        if inner.is_one() {
            Self::rational(self.p.clone() + q)
        } else {
            Self { p: self.p.clone(), q, r: BigRational::from_integer(inner) }
        }
    }
}

/// `m = outer^2 * inner` with `inner` free of square factors below 10^6.
fn split_square(mut m: BigInt) -> (BigInt, BigInt) {
    let mut outer = BigInt::one();
    let mut d = BigInt::from(2);
    let limit = BigInt::from(1_000_000);
    while &d * &d <= m && d < limit {
        let dd = &d * &d;
        while (&m % &dd).is_zero() {
            m /= &dd;
            outer *= &d;
        }
        d += 1;
    }
    (outer, m)
}

impl<T: Exponent> fmt::Display for QuadSurd<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q.is_zero() || self.r.is_zero() {
            return write!(f, "{}", self.p);
        }
        let root = format!("sqrt({})", self.r);
        let mag = self.q.abs();
        let term = if mag.is_one() { root } else { format!("{mag}*{root}") };
        match (self.p.is_zero(), self.q.is_negative()) {
            (true, false) => write!(f, "{term}"),
            (true, true) => write!(f, "-{term}"),
            (false, false) => write!(f, "{} + {term}", self.p),
            (false, true) => write!(f, "{} - {term}", self.p),
        }
    }
}

fn sign<T: Exponent>(x: &T) -> i8 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    StableSide,
    Critical,
    UnstableSide,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::StableSide => "stable-side",
            Side::Critical => "critical",
            Side::UnstableSide => "unstable-side",
        }
    }
}

/// Side of a region `{all margins > 0}`; critical when every margin is `>= 0`
/// and one vanishes.
fn conjunction<T: Exponent>(margins: &[T]) -> Side {
    if margins.iter().all(|m| m.is_positive()) {
        Side::StableSide
    } else if margins.iter().all(|m| !m.is_negative()) {
        Side::Critical
    } else {
        Side::UnstableSide
    }
}

fn from_ordering(o: Ordering) -> Side {
    match o {
        Ordering::Greater => Side::StableSide,
        Ordering::Equal => Side::Critical,
        Ordering::Less => Side::UnstableSide,
    }
}

fn half_dim<T: Exponent>(n: u32) -> T {
    T::ratio(n as i64 - 1, 2)
}

fn check_dim(n: u32) -> Option<()> {
    (n >= 2).then_some(())
}

/// Positive root of `(n-1) q^2 - (n+1) q - 2 = 0`.
pub fn strauss_exponent<T: Exponent>(n: u32) -> Option<QuadSurd<T>> {
    check_dim(n)?;
    let n = n as i64;
    Some(QuadSurd {
        p: T::ratio(n + 1, 2 * (n - 1)),
        q: T::ratio(1, 2 * (n - 1)),
        r: T::int((n + 1) * (n + 1) + 8 * (n - 1)),
    })
}

/// `1 + 2/(n-1)`.
pub fn glassey_exponent<T: Exponent>(n: u32) -> Option<QuadSurd<T>> {
    check_dim(n)?;
    Some(QuadSurd::rational(T::one() + T::ratio(2, n as i64 - 1)))
}

/// Critical power for `|∂_v φ|^q`: the positive root of
/// `q (q-1) (n+1)/2 = 1`, except in `n = 2` where the even-dimension cap moves
/// it to `3/2`.
pub fn dv_exponent<T: Exponent>(n: u32) -> Option<QuadSurd<T>> {
    check_dim(n)?;
    if n == 2 {
        return Some(QuadSurd::rational(T::ratio(3, 2)));
    }
    Some(QuadSurd { p: T::ratio(1, 2), q: T::ratio(1, 2), r: T::one() + T::ratio(8, n as i64 + 1) })
}

pub fn side_of<T: Exponent>(q: &T, critical: &QuadSurd<T>) -> Side {
    from_ordering(critical.cmp_rational(q).reverse())
}

/// `□φ_1 = |φ_2|^{q_1}`, `□φ_2 = |φ_1|^{q_2}`.
pub fn two_strauss_on_curve<T: Exponent>(q1: &T, q2: &T, n: u32) -> Option<Side> {
    check_dim(n)?;
    let den = q1.clone() * q2.clone() - T::one();
    let g1 = (q1.clone() + T::int(2) + T::one() / q2.clone()) / den.clone();
    let g2 = (q2.clone() + T::int(2) + T::one() / q1.clone()) / den;
    let g = T::max_of(g1, g2);
    Some(from_ordering(half_dim::<T>(n).partial_cmp(&g)?))
}

/// `□φ = |∂_t φ|^{q_1} + |φ|^{q_2}`.
pub fn strauss_glassey_scalar<T: Exponent>(q1: &T, q2: &T, n: u32) -> Option<Side> {
    let glassey = glassey_exponent::<T>(n)?;
    let strauss = strauss_exponent::<T>(n)?;
    let g = match side_of(q1, &glassey) {
        Side::StableSide => T::one(),
        Side::Critical => T::zero(),
        Side::UnstableSide => -T::one(),
    };
    let s = match side_of(q2, &strauss) {
        Side::StableSide => T::one(),
        Side::Critical => T::zero(),
        Side::UnstableSide => -T::one(),
    };
    let curve = (q2.clone() - T::one()) * (T::int(n as i64 - 1) * q1.clone() - T::int(2)) - T::int(4);
    Some(conjunction(&[g, s, curve]))
}

/// `□φ_1 = |φ_2|^{q_1}`, `□φ_2 = |∂_t φ_1|^{q_2}`.
pub fn strauss_glassey_system<T: Exponent>(q1: &T, q2: &T, n: u32) -> Option<Side> {
    let a_half = half_dim::<T>(n);
    let a = a_half.clone() * (q1.clone() - T::one()) - T::one();
    let b = a_half.clone() * (q2.clone() - T::one()) - T::one();
    let margin = if a.is_negative() {
        q2.clone() * q1.clone() * (b + q2.clone() * a) - T::one()
    } else {
        (a_half * q2.clone() - T::one()) * (q2.clone() * q1.clone() - T::one()) - (q2.clone() + T::int(2))
    };
    Some(conjunction(&[margin]))
}

/// `□φ_1 = |φ_2|^{q_1}`, `□φ_2 = |∂_t φ_1|^{(n+1)/(n-1)} + |φ_1|^{q_2}`.
pub fn strauss_null_curve<T: Exponent>(q1: &T, q2: &T, n: u32) -> Option<Side> {
    check_dim(n)?;
    let a_half = half_dim::<T>(n);
    let a = a_half.clone() * (q1.clone() - T::one()) - T::one();
    let b = a_half * (q2.clone() - T::one()) - T::one();
    if b.is_negative() {
        let m = q2.clone() * (a - T::one() + q1.clone() * b) - T::one();
        return Some(conjunction(&[m]));
    }
    let nn = n as i64;
    let first = q1.clone() - T::one() - T::ratio(4 * nn, nn * nn - 1);
    let second = b - T::one() + q2.clone() * (a - T::one());
    Some(conjunction(&[first, second]))
}

/// `□φ = t^α u^β |∂φ|^q`.
pub fn kitamura_condition<T: Exponent>(q: &T, alpha: &T, beta: &T, n: u32) -> Option<Side> {
    check_dim(n)?;
    let c1 = half_dim::<T>(n) * (q.clone() - T::one()) - T::one() - alpha.clone();
    let c2 = q.clone() * c1.clone() + q.clone() - T::one() - beta.clone();
    Some(conjunction(&[c1, c2]))
}

/// `□φ = |φ|^{q_1}` with data decaying like `r^{-q_2}`.
pub fn initial_tail_condition<T: Exponent>(q1: &T, q2: &T, n: u32) -> Option<Side> {
    check_dim(n)?;
    let a = half_dim::<T>(n) * (q1.clone() - T::one()) - T::one();
    let c = T::min_of(a.clone(), q2.clone() - T::one());
    let iter = a.clone() + (q1.clone() - T::one()) * c - T::one();
    Some(conjunction(&[a, q2.clone() - T::one(), iter]))
}
