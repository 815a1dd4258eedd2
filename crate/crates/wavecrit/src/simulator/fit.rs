use serde::Serialize;

use super::SimError;
use crate::scalar::Real;

/// `|value| ≈ C t^{-exponent} log^k t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit<F> {
    pub exponent: F,
    pub log_power: u32,
    pub prefactor: F,
    pub residual: F,
    pub samples: usize,
    /// The series changed sign and the dyadic-maxima envelope was fitted.
    pub envelope: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub min_samples: usize,
    pub min_decades: f64,
    /// Samples with `t < exclude_factor · max(t_first, 1)` are dropped.
    pub exclude_factor: f64,
    pub max_log_power: u32,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { min_samples: 12, min_decades: 2.0, exclude_factor: 10.0, max_log_power: 3 }
    }
}

fn dyadic_envelope<F: Real>(pts: &[(F, F)]) -> Vec<(F, F)> {
    let mut out: Vec<(i64, F, F)> = Vec::new();
    for &(t, v) in pts {
        let bin = t.log2().floor().to_i64().unwrap_or(i64::MIN);
        match out.last_mut() {
            Some((b, bt, bv)) if *b == bin => {
                if v.abs() > *bv {
                    *bt = t;
                    *bv = v.abs();
                }
            }
            _ => out.push((bin, t, v.abs())),
        }
    }
    out.into_iter().map(|(_, t, v)| (t, v)).collect()
}

/// Least-squares fit of `log|value|` against `log t` with a log correction
/// `k ∈ {0..=max_log_power}` chosen by smallest residual.
pub fn fit_decay<F: Real>(series: &[(F, F)], opts: &FitOptions) -> Result<DecayFit<F>, SimError> {
    let mut pts: Vec<(F, F)> = series
        .iter()
        .copied()
        .filter(|(t, v)| t.is_finite() && v.is_finite() && *t > F::zero())
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
    let Some(&(t_first, _)) = pts.first() else {
        return Err(SimError::InsufficientRange("empty series".into()));
    };
    let cut = t_first.max(F::one()) * F::c(opts.exclude_factor);
    pts.retain(|(t, _)| *t >= cut);
    let sign_change = pts.windows(2).any(|w| w[0].1 * w[1].1 < F::zero());
    if sign_change {
        pts = dyadic_envelope(&pts);
    }
    pts.retain(|(_, v)| *v != F::zero());
    let n = pts.len();
    let decades = match (pts.first(), pts.last()) {
        (Some(a), Some(b)) => (b.0 / a.0).log10().f64(),
        _ => 0.0,
    };
    if n < opts.min_samples || decades < opts.min_decades {
        return Err(SimError::InsufficientRange(format!(
            "{n} usable samples over {decades:.2} decades; need {} over {}",
            opts.min_samples, opts.min_decades
        )));
    }
    let x: Vec<F> = pts.iter().map(|(t, _)| t.ln()).collect();
    let ll: Vec<F> = x.iter().map(|l| l.ln()).collect();
    let y: Vec<F> = pts.iter().map(|(_, v)| v.abs().ln()).collect();
    let nf = F::c(n as f64);
    let mx = x.iter().copied().sum::<F>() / nf;
    let sxx = x.iter().map(|&a| (a - mx) * (a - mx)).sum::<F>();
    let mut best: Option<DecayFit<F>> = None;
    for k in 0..=opts.max_log_power {
        let kf = F::c(k as f64);
        let yk: Vec<F> = y.iter().zip(&ll).map(|(&a, &b)| a - kf * b).collect();
        let my = yk.iter().copied().sum::<F>() / nf;
        let sxy = x.iter().zip(&yk).map(|(&a, &b)| (a - mx) * (b - my)).sum::<F>();
        let slope = sxy / sxx;
        let icpt = my - slope * mx;
        let rss = x
            .iter()
            .zip(&yk)
            .map(|(&a, &b)| {
                let e = b - icpt - slope * a;
                e * e
            })
            .sum::<F>();
        let cand = DecayFit {
            exponent: -slope,
            log_power: k,
            prefactor: icpt.exp(),
            residual: (rss / nf).sqrt(),
            samples: n,
            envelope: sign_change,
        };
        let better = match &best {
            None => true,
            Some(b) => cand.residual < b.residual * F::c(1.0 - 1e-9) - F::c(1e-14),
        };
        if better {
            best = Some(cand);
        }
    }
    Ok(best.expect("at least one model"))
}

/// Slope of `log|value|` against `log t` with no log correction, over all
/// samples in `[t_lo, t_hi]`.
pub fn loglog_slope<F: Real>(series: &[(F, F)], t_lo: F, t_hi: F) -> Option<F> {
    let pts: Vec<(F, F)> = series
        .iter()
        .copied()
        .filter(|(t, v)| *t >= t_lo && *t <= t_hi && v.is_finite() && *v != F::zero())
        .map(|(t, v)| (t.ln(), v.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = F::c(pts.len() as f64);
    let mx = pts.iter().map(|p| p.0).sum::<F>() / n;
    let my = pts.iter().map(|p| p.1).sum::<F>() / n;
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<F>();
    let sxx = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<F>();
    Some(sxy / sxx)
}
