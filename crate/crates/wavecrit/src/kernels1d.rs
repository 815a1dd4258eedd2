//! Solution kernel of `∂_u ∂_v ψ = F` with `ψ = 0` on the axis `u = v` and
//! zero data, and the decay estimates it yields.
//!
//! ```text
//! ψ(u,v)   = ∫_{u0}^{u} du' ∫_{u}^{v} dv' F(u',v')
//! ∂_v ψ    = ∫_{u0}^{u} F(u',v) du'
//! ∂_u ψ    = -∫_{u0}^{u} F(u',u) du' + ∫_{u}^{v} F(u,v') dv'
//! ```

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::scalar::{Exponent, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("forcing is not integrable: {0}")]
    NonIntegrable(String),
    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    ToleranceNotMet { tol: f64, estimate: f64 },
}

pub type ForcingFn<F> = Arc<dyn Fn(F, F) -> F + Send + Sync>;

#[derive(Clone)]
pub enum Forcing<F> {
    /// `c v^{-σ} u^{-z}` for `u > u0`.
    PowerLaw { c: F, sigma: F, z: F, u0: F },
    /// An arbitrary forcing supported in `u >= u0`.
    Closure { f: ForcingFn<F>, u0: F },
}

impl<F: Real> Forcing<F> {
    pub fn power_law(c: F, sigma: F, z: F, u0: F) -> Self {
        Forcing::PowerLaw { c, sigma, z, u0 }
    }

    pub fn closure(u0: F, f: impl Fn(F, F) -> F + Send + Sync + 'static) -> Self {
        Forcing::Closure { f: Arc::new(f), u0 }
    }

    pub fn u0(&self) -> F {
        match self {
            Forcing::PowerLaw { u0, .. } | Forcing::Closure { u0, .. } => *u0,
        }
    }

    pub fn eval(&self, u: F, v: F) -> F {
        match self {
            Forcing::PowerLaw { c, sigma, z, u0 } => {
                if u > *u0 {
                    *c * v.powf(-*sigma) * u.powf(-*z)
                } else {
                    F::zero()
                }
            }
            Forcing::Closure { f, u0 } => {
                if u >= *u0 {
                    f(u, v)
                } else {
                    F::zero()
                }
            }
        }
    }

    /// The same forcing seen as a closure, so quadrature can be forced.
    pub fn as_closure(&self) -> Self {
        let me = self.clone();
        Forcing::closure(self.u0(), move |u, v| me.eval(u, v))
    }
}

impl<F: fmt::Debug> fmt::Debug for Forcing<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::PowerLaw { c, sigma, z, u0 } => f
                .debug_struct("PowerLaw")
                .field("c", c)
                .field("sigma", sigma)
                .field("z", z)
                .field("u0", u0)
                .finish(),
            Forcing::Closure { u0, .. } => f.debug_struct("Closure").field("u0", u0).finish(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelValues<F> {
    pub psi: F,
    pub dv_psi: F,
    pub du_psi: F,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions<F> {
    pub rel_tol: F,
    pub abs_tol: F,
    pub max_depth: u32,
}

impl<F: Real> Default for QuadratureOptions<F> {
    fn default() -> Self {
        Self { rel_tol: F::c(1e-10), abs_tol: F::c(1e-300), max_depth: 40 }
    }
}

/// `∫_a^b x^{-p} dx` for `0 < a <= b`.
pub fn power_integral<F: Real>(a: F, b: F, p: F) -> F {
    let e = F::one() - p;
    let l = (b / a).ln();
    if e == F::zero() {
        l
    } else {
        a.powf(e) * (e * l).exp_m1() / e
    }
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Real>(f: &dyn Fn(F) -> F, a: F, b: F) -> (F, F) {
    let half = F::c(0.5);
    let c = (a + b) * half;
    let h = (b - a) * half;
    let fc = f(c);
    let mut k = fc * F::c(GK_WEIGHTS[7]);
    let mut g = fc * F::c(G_WEIGHTS[3]);
    for i in 0..7 {
        let x = h * F::c(GK_NODES[i]);
        let s = f(c - x) + f(c + x);
        k = k + s * F::c(GK_WEIGHTS[i]);
        if i % 2 == 1 {
            g = g + s * F::c(G_WEIGHTS[i / 2]);
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod 7/15 quadrature.
pub fn integrate<F: Real>(
    f: &dyn Fn(F) -> F,
    a: F,
    b: F,
    opts: &QuadratureOptions<F>,
) -> Result<F, KernelError> {
    if a == b {
        return Ok(F::zero());
    }
    let (whole, err) = gk15(f, a, b);
    let tol = opts.abs_tol.max(opts.rel_tol * whole.abs());
    if !whole.is_finite() {
        return Err(KernelError::NonIntegrable(format!("non-finite integrand on [{a}, {b}]")));
    }
    if err <= tol {
        return Ok(whole);
    }
    let mut total = F::zero();
    let mut worst = F::zero();
    let mut stack = vec![(a, b, 0u32)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let mid = (lo + hi) * F::c(0.5);
        let (l, el) = gk15(f, lo, mid);
        let (r, er) = gk15(f, mid, hi);
        let local_tol = tol * (hi - lo) / (b - a).abs();
        if !(l + r).is_finite() {
            return Err(KernelError::NonIntegrable(format!("non-finite integrand near {mid}")));
        }
        if el + er <= local_tol.max(F::epsilon() * (l + r).abs()) || depth >= opts.max_depth {
            if depth >= opts.max_depth {
                worst = worst.max(el + er);
            }
            total = total + l + r;
        } else {
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    if worst > tol * F::c(1e3) {
        return Err(KernelError::ToleranceNotMet { tol: tol.f64(), estimate: worst.f64() });
    }
    Ok(total)
}

fn check_point<F: Real>(u0: F, u: F, v: F) -> Result<(), KernelError> {
    if !(u.is_finite() && v.is_finite() && u0.is_finite()) {
        return Err(KernelError::InvalidArgument("non-finite coordinate".into()));
    }
    if v < u {
        return Err(KernelError::InvalidArgument(format!("point ({u}, {v}) lies beyond the axis v = u")));
    }
    Ok(())
}

/// `(ψ, ∂_v ψ, ∂_u ψ)` at `(u, v)`.
///
/// Power-law forcings use the closed form; closures use nested adaptive
/// quadrature.
pub fn kernel_value<F: Real>(
    forcing: &Forcing<F>,
    u: F,
    v: F,
    opts: &QuadratureOptions<F>,
) -> Result<KernelValues<F>, KernelError> {
    let u0 = forcing.u0();
    check_point(u0, u, v)?;
    if u <= u0 {
        return Ok(KernelValues { psi: F::zero(), dv_psi: F::zero(), du_psi: F::zero() });
    }
    match forcing {
        Forcing::PowerLaw { c, sigma, z, u0 } => {
            if *u0 <= F::zero() {
                return Err(KernelError::NonIntegrable(format!("power law needs u0 > 0, got {u0}")));
            }
            let iu = power_integral(*u0, u, *z);
            let iv = power_integral(u, v, *sigma);
            Ok(KernelValues {
                psi: *c * iu * iv,
                dv_psi: *c * v.powf(-*sigma) * iu,
                du_psi: *c * (u.powf(-*z) * iv - u.powf(-*sigma) * iu),
            })
        }
        Forcing::Closure { f, .. } => {
            let inner = |up: F| integrate(&|vp: F| f(up, vp), u, v, opts);
            let psi = {
                let err = std::cell::RefCell::new(None);
                let val = integrate(
                    &|up: F| match inner(up) {
                        Ok(x) => x,
                        Err(e) => {
                            err.borrow_mut().get_or_insert(e);
                            F::zero()
                        }
                    },
                    u0,
                    u,
                    opts,
                );
                if let Some(e) = err.into_inner() {
                    return Err(e);
                }
                val?
            };
            let dv_psi = integrate(&|up: F| f(up, v), u0, u, opts)?;
            let du_psi = integrate(&|vp: F| f(u, vp), u, v, opts)? - integrate(&|up: F| f(up, u), u0, u, opts)?;
            Ok(KernelValues { psi, dv_psi, du_psi })
        }
    }
}

/// Growth rates of `(ψ, ∂_v ψ, ∂_u ψ)` along an interior ray `v = λu` for the
/// forcing `v^{-σ} u^{-z}`.
pub fn interior_rates(sigma: f64, z: f64) -> [f64; 3] {
    let g = (1.0 - z).max(0.0);
    [g + 1.0 - sigma, g - sigma, g - sigma]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRate<F> {
    /// Decay in `t` at fixed `u`.
    pub t_rate: F,
    /// Decay in `u` of `t φ`.
    pub u_rate: F,
    /// `q = 1`: the bound carries a logarithm.
    pub logarithmic: bool,
}

/// Lower bound `φ ≳ t^{-1} u^{1-q+max(1-s,0)}` for a positive forcing
/// `c v^{-q} u^{-s}` supported in `u > u0`.
pub fn lower_bound_tail<F: Real>(c: F, q: F, s: F, u0: F) -> Result<TailRate<F>, KernelError> {
    if !(c > F::zero()) {
        return Err(KernelError::InvalidArgument(format!("forcing must be positive, got c = {c}")));
    }
    if !(u0 > F::zero()) || !q.is_finite() || !s.is_finite() {
        return Err(KernelError::InvalidArgument("need u0 > 0 and finite exponents".into()));
    }
    Ok(TailRate {
        t_rate: F::one(),
        u_rate: q - F::one() - (F::one() - s).max(F::zero()),
        logarithmic: q == F::one(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JohnBound<T> {
    /// Supremum of admissible `v`-weights; not attained.
    pub alpha_sup: T,
    pub beta: T,
    /// `δ = 1`: a logarithm is lost.
    pub logarithmic: bool,
}

/// Weighted bound `⟨v⟩^α ⟨u⟩^β |φ| ≲ 1` for a forcing decaying like
/// `⟨v⟩^{-γ} ⟨u⟩^{-δ}`, valid for `α < (n-1)/2`.
pub fn john_bound<T: Exponent>(gamma: &T, delta: &T, n: u32) -> Result<JohnBound<T>, KernelError> {
    if n < 2 {
        return Err(KernelError::InvalidArgument(format!("dimension {n} < 2")));
    }
    Ok(JohnBound {
        alpha_sup: T::ratio(n as i64 - 1, 2),
        beta: gamma.clone() - T::ratio(n as i64 + 3, 2) + T::min_of(T::one(), delta.clone()),
        logarithmic: *delta == T::one(),
    })
}
