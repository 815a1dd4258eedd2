//! Finite-time blow-up of cyclic Gronwall-type systems
//! `∂_t x_i = c_i t^{-α_i} x_{i-1}^{p_i}` (indices mod n), and construction of
//! such systems from simulated moments.
//!
//! Blow-up is expected when `Π p_i > 1`, `Σ α_i <= n` and the data are
//! positive.

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GronwallSystem<F> {
    pub c: Vec<F>,
    pub alpha: Vec<F>,
    pub p: Vec<F>,
    /// `x_i(t0)`.
    pub x0: Vec<F>,
    pub t0: F,
}

impl<F: Real> GronwallSystem<F> {
    pub fn new(c: Vec<F>, alpha: Vec<F>, p: Vec<F>, x0: Vec<F>, t0: F) -> Result<Self, OracleError> {
        let n = c.len();
        if n == 0 || alpha.len() != n || p.len() != n || x0.len() != n {
            return Err(OracleError::InvalidArgument("component vectors must share a nonzero length".into()));
        }
        if !(t0 > F::zero()) {
            return Err(OracleError::InvalidArgument(format!("t0 must be positive, got {t0}")));
        }
        if c.iter().chain(&alpha).chain(&p).chain(&x0).any(|v| !v.is_finite()) {
            return Err(OracleError::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(Self { c, alpha, p, x0, t0 })
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    fn rhs(&self, s: F, x: &[F], out: &mut [F]) {
        let n = self.dim();
        for i in 0..n {
            let prev = x[(i + n - 1) % n];
            out[i] = self.c[i] * (s * (F::one() - self.alpha[i])).exp() * prev.max(F::zero()).powf(self.p[i]);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProofConstants<F> {
    /// `p_1^{i/n}` for the largest power `p_1`.
    pub q: Vec<F>,
    pub q_sum: F,
    /// `p_1^{1/n} - 1`.
    pub c: F,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport<F> {
    pub product_p: F,
    pub sum_alpha: F,
    pub product_exceeds_one: bool,
    pub alpha_sum_admissible: bool,
    pub data_positive: bool,
    pub coefficients_positive: bool,
    pub holds: bool,
    pub constants: ProofConstants<F>,
}

pub fn check_hypotheses<F: Real>(sys: &GronwallSystem<F>) -> HypothesisReport<F> {
    let n = sys.dim();
    let nf = F::c(n as f64);
    let product_p = sys.p.iter().fold(F::one(), |a, &b| a * b);
    let sum_alpha = sys.alpha.iter().copied().sum::<F>();
    let mut sorted = sys.p.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let p1 = sorted[0];
    let q: Vec<F> = (1..=n).map(|i| p1.powf(F::c(i as f64) / nf)).collect();
    let q_sum = q.iter().copied().sum::<F>();
    let constants = ProofConstants { q, q_sum, c: p1.powf(F::one() / nf) - F::one() };
    let product_exceeds_one = product_p > F::one();
    let alpha_sum_admissible = sum_alpha <= nf;
    let data_positive = sys.x0.iter().all(|&x| x > F::zero());
    let coefficients_positive = sys.c.iter().all(|&c| c > F::zero());
    HypothesisReport {
        product_p,
        sum_alpha,
        product_exceeds_one,
        alpha_sum_admissible,
        data_positive,
        coefficients_positive,
        holds: product_exceeds_one && alpha_sum_admissible && data_positive && coefficients_positive,
        constants,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrateOptions<F> {
    pub rtol: F,
    pub atol: F,
    pub t_max: F,
    /// A component above this level triggers the blow-up test.
    pub blowup_level: F,
    pub max_steps: usize,
    /// Relative agreement required between the `rtol` and `rtol/10` runs.
    pub agreement: F,
}

impl<F: Real> Default for IntegrateOptions<F> {
    fn default() -> Self {
        Self {
            rtol: F::c(1e-8),
            atol: F::c(1e-12),
            t_max: F::c(1e10),
            blowup_level: F::c(1e12),
            max_steps: 2_000_000,
            agreement: F::c(0.05),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IntegrationOutcome<F> {
    BlowUp { t_star: F, remaining_log_time: F, steps: usize },
    Global { t_end: F, x_end: Vec<F>, steps: usize },
    Inconclusive { reason: String },
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive integration in `s = log t`. `growth` is the exponent used for the
/// remaining-time estimate `Δs ≈ x / (μ ∂_s x)`.
fn integrate_rhs<F: Real>(
    rhs: &dyn Fn(F, &[F], &mut [F]),
    x0: &[F],
    t0: F,
    growth: F,
    opts: &IntegrateOptions<F>,
    rtol: F,
) -> IntegrationOutcome<F> {
    let n = x0.len();
    let mut s = t0.ln();
    let s_end = opts.t_max.ln();
    let mut x = x0.to_vec();
    let mut k = vec![vec![F::zero(); n]; 7];
    let mut tmp = vec![F::zero(); n];
    let mut dt = F::c(1e-3).max((s_end - s).abs() * F::c(1e-6));
    let mut steps = 0usize;
    rhs(s, &x, &mut k[0]);
    while s < s_end {
        if steps >= opts.max_steps {
            return IntegrationOutcome::Inconclusive { reason: format!("step budget exhausted at t = {}", s.exp()) };
        }
        dt = dt.min(s_end - s);
        for stage in 1..7 {
            for i in 0..n {
                let mut acc = x[i];
                for (j, kj) in k.iter().enumerate().take(stage) {
                    acc = acc + dt * F::c(A[stage - 1][j]) * kj[i];
                }
                tmp[i] = acc;
            }
            let (_, tail) = k.split_at_mut(stage);
            rhs(s + dt * F::c(C[stage]), &tmp, &mut tail[0]);
        }
        let mut err = F::zero();
        let mut x_new = vec![F::zero(); n];
        for i in 0..n {
            let mut hi = x[i];
            let mut lo = x[i];
            for j in 0..7 {
                hi = hi + dt * F::c(B5[j]) * k[j][i];
                lo = lo + dt * F::c(B4[j]) * k[j][i];
            }
            x_new[i] = hi;
            let scale = opts.atol + rtol * x[i].abs().max(hi.abs());
            err = err.max(((hi - lo) / scale).abs());
        }
        if !err.is_finite() || x_new.iter().any(|v| !v.is_finite()) {
            dt = dt * F::c(0.2);
            if dt < F::c(1e-300) {
                return IntegrationOutcome::Inconclusive { reason: "step size underflow".into() };
            }
            continue;
        }
        if err <= F::one() {
            s = s + dt;
            x = x_new;
            steps += 1;
            rhs(s, &x, &mut k[0]);
            let (imax, xmax) = x
                .iter()
                .copied()
                .enumerate()
                .fold((0, F::neg_infinity()), |a, (i, v)| if v > a.1 { (i, v) } else { a });
            if xmax > opts.blowup_level {
                let rate = k[0][imax];
                let remaining = if rate > F::zero() { xmax / (growth * rate) } else { F::infinity() };
                if remaining <= rtol * (F::one() + s.abs()) {
                    return IntegrationOutcome::BlowUp { t_star: s.exp(), remaining_log_time: remaining, steps };
                }
            }
        }
        let factor = if err == F::zero() { F::c(5.0) } else { F::c(0.9) * err.powf(F::c(-0.2)) };
        dt = dt * factor.min(F::c(5.0)).max(F::c(0.2));
    }
    IntegrationOutcome::Global { t_end: s.exp(), x_end: x, steps }
}

fn growth_exponent<F: Real>(sys: &GronwallSystem<F>) -> F {
    let c = check_hypotheses(sys).constants;
    let mu = c.c / c.q_sum;
    if mu > F::zero() {
        mu
    } else {
        F::one()
    }
}

/// Integrates at `rtol` and `rtol/10`; blow-up is confirmed only when both
/// runs blow up at times within `agreement` of each other.
pub fn integrate<F: Real>(sys: &GronwallSystem<F>, opts: &IntegrateOptions<F>) -> IntegrationOutcome<F> {
    let mu = growth_exponent(sys);
    let rhs = |s: F, x: &[F], out: &mut [F]| sys.rhs(s, x, out);
    integrate_confirmed(&rhs, &sys.x0, sys.t0, mu, opts)
}

fn integrate_confirmed<F: Real>(
    rhs: &dyn Fn(F, &[F], &mut [F]),
    x0: &[F],
    t0: F,
    mu: F,
    opts: &IntegrateOptions<F>,
) -> IntegrationOutcome<F> {
    let coarse = integrate_rhs(rhs, x0, t0, mu, opts, opts.rtol);
    let fine = integrate_rhs(rhs, x0, t0, mu, opts, opts.rtol * F::c(0.1));
    match (&coarse, &fine) {
        (IntegrationOutcome::BlowUp { t_star: a, .. }, IntegrationOutcome::BlowUp { t_star: b, .. }) => {
            if ((*a - *b) / *b).abs() <= opts.agreement {
                fine
            } else {
                IntegrationOutcome::Inconclusive {
                    reason: format!("blow-up times {a} and {b} disagree between tolerances"),
                }
            }
        }
        (IntegrationOutcome::Global { .. }, IntegrationOutcome::Global { .. }) => fine,
        (IntegrationOutcome::Inconclusive { .. }, _) => coarse,
        (_, IntegrationOutcome::Inconclusive { .. }) => fine,
        _ => IntegrationOutcome::Inconclusive { reason: "tolerance runs disagree on blow-up".into() },
    }
}

/// `H_i'' = c_i t^{-α_i} H_{i-1}^{p_i}` (indices mod m).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondOrderSystem<F> {
    pub c: Vec<F>,
    pub alpha: Vec<F>,
    pub p: Vec<F>,
    pub h0: Vec<F>,
    pub dh0: Vec<F>,
    pub t0: F,
}

impl<F: Real> SecondOrderSystem<F> {
    /// The interleaved first-order system on
    /// `(H_0', H_0, H_1', H_1, ...)`.
    pub fn to_first_order(&self) -> Result<GronwallSystem<F>, OracleError> {
        let m = self.c.len();
        let mut c = Vec::with_capacity(2 * m);
        let mut alpha = Vec::with_capacity(2 * m);
        let mut p = Vec::with_capacity(2 * m);
        let mut x0 = Vec::with_capacity(2 * m);
        for i in 0..m {
            c.extend([self.c[i], F::one()]);
            alpha.extend([self.alpha[i], F::zero()]);
            p.extend([self.p[i], F::one()]);
            x0.extend([self.dh0[i], self.h0[i]]);
        }
        GronwallSystem::new(c, alpha, p, x0, self.t0)
    }

    /// Direct integration of the second-order form with state `(H, H')`.
    pub fn integrate(&self, opts: &IntegrateOptions<F>) -> Result<IntegrationOutcome<F>, OracleError> {
        let m = self.c.len();
        if self.alpha.len() != m || self.p.len() != m || self.h0.len() != m || self.dh0.len() != m {
            return Err(OracleError::InvalidArgument("component vectors must share a length".into()));
        }
        let mu = growth_exponent(&self.to_first_order()?);
        let rhs = |s: F, y: &[F], out: &mut [F]| {
            let t = s.exp();
            for i in 0..m {
                let prev = y[(i + m - 1) % m];
                out[i] = t * y[m + i];
                out[m + i] = t * self.c[i] * t.powf(-self.alpha[i]) * prev.max(F::zero()).powf(self.p[i]);
            }
        };
        let mut y0 = self.h0.clone();
        y0.extend(self.dh0.iter().copied());
        Ok(integrate_confirmed(&rhs, &y0, self.t0, mu, opts))
    }
}

/// Template `H_i'' >= c_i t^{-α_i} H_{i-1}^{p_i}` with constants to be
/// fitted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingTemplate<F> {
    pub alpha: Vec<F>,
    pub p: Vec<F>,
    /// Fitted constants at or below this value count as non-positive.
    pub positivity_threshold: F,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CouplingOutcome<F> {
    Applicable { system: SecondOrderSystem<F>, hypotheses: HypothesisReport<F> },
    NotApplicable { reason: String },
}

fn derivatives<F: Real>(series: &[(F, F)]) -> Vec<(F, F, F, F)> {
    let mut out = Vec::new();
    for w in series.windows(3) {
        let (t0, y0) = w[0];
        let (t1, y1) = w[1];
        let (t2, y2) = w[2];
        let h0 = t1 - t0;
        let h1 = t2 - t1;
        let d1 = -h1 / (h0 * (h0 + h1)) * y0 + (h1 - h0) / (h0 * h1) * y1 + h0 / (h1 * (h0 + h1)) * y2;
        let d2 = F::c(2.0) * (y0 / (h0 * (h0 + h1)) - y1 / (h0 * h1) + y2 / (h1 * (h0 + h1)));
        out.push((t1, y1, d1, d2));
    }
    out
}

/// Fits the constants of `template` from moment series sampled at common
/// times, and returns the earliest starting time at which the comparison
/// system is positive and satisfies the blow-up hypotheses.
pub fn couple_from_moments<F: Real>(
    moments: &[Vec<(F, F)>],
    template: &CouplingTemplate<F>,
) -> Result<CouplingOutcome<F>, OracleError> {
    let m = moments.len();
    if m == 0 || template.alpha.len() != m || template.p.len() != m {
        return Err(OracleError::InvalidArgument("template and moments disagree in length".into()));
    }
    let d: Vec<Vec<(F, F, F, F)>> = moments.iter().map(|s| derivatives(s)).collect();
    let len = d.iter().map(Vec::len).min().unwrap_or(0);
    if len < 3 {
        return Ok(CouplingOutcome::NotApplicable { reason: "moment series too short".into() });
    }
    let mut last_reason = String::from("no sampled starting time gave positive data");
    for k0 in 0..len.saturating_sub(2) {
        let t0 = d[0][k0].0;
        if (0..m).any(|i| !(d[i][k0].1 > F::zero() && d[i][k0].2 > F::zero())) {
            continue;
        }
        let mut c = vec![F::infinity(); m];
        for k in k0..len {
            for i in 0..m {
                let (t, _, _, h2) = d[i][k];
                let prev = d[(i + m - 1) % m][k].1;
                let base = t.powf(-template.alpha[i]) * prev.max(F::zero()).powf(template.p[i]);
                let ratio = if base > F::zero() { h2 / base } else { F::infinity() };
                c[i] = c[i].min(ratio);
            }
        }
        if c.iter().any(|&ci| !(ci > template.positivity_threshold) || !ci.is_finite()) {
            last_reason = format!("fitted constants {c:?} not above threshold from t0 = {t0}");
            continue;
        }
        let system = SecondOrderSystem {
            c,
            alpha: template.alpha.clone(),
            p: template.p.clone(),
            h0: (0..m).map(|i| d[i][k0].1).collect(),
            dh0: (0..m).map(|i| d[i][k0].2).collect(),
            t0,
        };
        let hypotheses = check_hypotheses(&system.to_first_order()?);
        if hypotheses.holds {
            return Ok(CouplingOutcome::Applicable { system, hypotheses });
        }
        last_reason = format!(
            "hypotheses fail from t0 = {t0}: product {} sum alpha {}",
            hypotheses.product_p, hypotheses.sum_alpha
        );
    }
    Ok(CouplingOutcome::NotApplicable { reason: last_reason })
}

/// Comparison system for `□φ_1 = |φ_2|^{q_1}`, `□φ_2 = |∂_t φ_1|^{q_2}` in
/// three dimensions:
///
/// ```text
/// y_1' = c_1 t^{-3(q_1-1) + (q_1-1-ε)(2-s_2)} y_2^{1+ε}
/// y_2' = y_3
/// y_3' = c_2 t^{-3(q_2-1) + (q_2-1-ε)(4-s_2 q_1-q_1)} y_1^{1+ε}
/// ```
///
/// with `s_2 = q_2 - 2 + q_2(q_1 - 2)`, returned in cyclic order
/// `(y_3, y_2, y_1)`. `y0` is `(y_1, y_2, y_3)` at `t0`.
pub fn strauss_glassey_comparison<F: Real>(
    q1: F,
    q2: F,
    eps: F,
    c: [F; 2],
    y0: [F; 3],
    t0: F,
) -> Result<GronwallSystem<F>, OracleError> {
    let one = F::one();
    let (two, three, four) = (F::c(2.0), F::c(3.0), F::c(4.0));
    let s2 = q2 - two + q2 * (q1 - two);
    let e1 = -three * (q1 - one) + (q1 - one - eps) * (two - s2);
    let e3 = -three * (q2 - one) + (q2 - one - eps) * (four - s2 * q1 - q1);
    GronwallSystem::new(
        vec![c[1], one, c[0]],
        vec![-e3, F::zero(), -e1],
        vec![one + eps, one, one + eps],
        vec![y0[2], y0[1], y0[0]],
        t0,
    )
}
