use serde::Serialize;

use super::{
    evolve, fit_decay, DataProfile, DecayFit, EvolveOptions, FitOptions, Grid, Monitor, Probe, ProbeKind, Quantity,
    SimError, SimSystem, SimTerm, SpacetimePoint,
};
use crate::decay_rules::Derivative;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupOptions<F> {
    /// Blow-up is declared once `|φ|` exceeds this multiple of the data
    /// amplitude.
    pub threshold_factor: F,
    /// Relative agreement required between successive refinements.
    pub agreement: F,
    pub refinements: usize,
}

impl<F: Real> Default for BlowupOptions<F> {
    fn default() -> Self {
        Self { threshold_factor: F::c(1e6), agreement: F::c(0.1), refinements: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupCertificate<F> {
    /// Grid steps `h, h/2, h/4, ...`.
    pub steps: Vec<F>,
    /// Threshold-crossing times; `None` where a run stayed below threshold.
    pub times: Vec<Option<F>>,
    /// `(T_h - T_{h/2}) / (T_{h/2} - T_{h/4})` when defined.
    pub convergence_ratio: Option<F>,
    pub certified: bool,
    pub threshold: F,
}

/// Runs the same problem on successively halved grids and certifies blow-up
/// when every run crosses the threshold and successive crossing times agree.
pub fn detect_blowup<F: Real>(
    sys: &SimSystem<F>,
    data: &[DataProfile<F>],
    grid: &Grid<F>,
    opts: &BlowupOptions<F>,
) -> Result<BlowupCertificate<F>, SimError> {
    let amplitude = data.iter().map(|d| d.phi0.abs().max(d.phi1.abs())).fold(F::zero(), F::max);
    if amplitude == F::zero() {
        return Err(SimError::Config("blow-up detection needs nonzero data".into()));
    }
    let threshold = opts.threshold_factor * amplitude;
    let mut steps = Vec::new();
    let mut times = Vec::new();
    for k in 0..opts.refinements.max(1) {
        let g = grid.refined(F::c((1u64 << k) as f64));
        let run = evolve(
            sys,
            data,
            &g,
            &EvolveOptions { blowup_threshold: Some(threshold), ..EvolveOptions::default() },
        )?;
        steps.push(g.h);
        times.push(run.blowup.map(|b| b.point.t));
    }
    let all: Option<Vec<F>> = times.iter().copied().collect();
    let (certified, ratio) = match &all {
        Some(ts) => {
            let agree = ts.windows(2).all(|w| ((w[0] - w[1]) / w[1]).abs() <= opts.agreement);
            let ratio = (ts.len() >= 3 && ts[1] != ts[2]).then(|| (ts[0] - ts[1]) / (ts[1] - ts[2]));
            (agree, ratio)
        }
        None => (false, None),
    };
    Ok(BlowupCertificate { steps, times, convergence_ratio: ratio, certified, threshold })
}

/// `H_i(t) = ∫ ψ_i dr` at the requested times.
pub fn moment_series<F: Real>(
    sys: &SimSystem<F>,
    data: &[DataProfile<F>],
    grid: &Grid<F>,
    times: &[F],
    blowup_threshold: Option<F>,
) -> Result<Vec<Vec<(F, F)>>, SimError> {
    let run = evolve(
        sys,
        data,
        grid,
        &EvolveOptions { moment_times: times.to_vec(), blowup_threshold, ..EvolveOptions::default() },
    )?;
    Ok(run.moments)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakNullOptions<F> {
    pub amplitude: F,
    pub h: F,
    pub stretch: F,
    pub v_max: F,
    pub rho: F,
    pub fit: FitOptions,
}

impl<F: Real> Default for WeakNullOptions<F> {
    fn default() -> Self {
        Self {
            amplitude: F::c(1e-2),
            h: F::c(1.0 / 32.0),
            stretch: F::c(0.02),
            v_max: F::c(1e24),
            rho: F::c(0.25),
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakNullReport<F> {
    /// Fit of `ψ_4 = r φ_4` at fixed `ρ`; growth rate is `-exponent`.
    pub psi4: DecayFit<F>,
    /// Fit of `∂_v ψ_4` at fixed `ρ`.
    pub dv_psi4: DecayFit<F>,
    /// First point with `|∂_v φ_4| >= 1`.
    pub obstruction: Option<SpacetimePoint<F>>,
    pub psi4_series: Vec<(F, F)>,
    pub dv_psi4_series: Vec<(F, F)>,
}

/// `□φ_1 = 0`, `□φ_{k+1} = φ_k^2` for `k = 1, 2, 3`, with data only in `φ_1`.
pub fn weak_null_chain<F: Real>(opts: &WeakNullOptions<F>) -> Result<WeakNullReport<F>, SimError> {
    let terms = (0..3)
        .map(|k| SimTerm {
            equation: k + 1,
            source: k,
            derivative: Derivative::None,
            power: F::c(2.0),
            coefficient: F::one(),
            t_weight: F::zero(),
            u_weight: F::zero(),
        })
        .collect();
    let sys = SimSystem::new(4, terms)?;
    let mut data = vec![DataProfile::zero(); 4];
    data[0] = DataProfile::bump(opts.amplitude, F::zero(), F::one());
    let grid = Grid::stretched(opts.h, opts.v_max, opts.v_max, opts.stretch, F::c(2.0));
    let run = evolve(
        &sys,
        &data,
        &grid,
        &EvolveOptions {
            probes: vec![
                Probe { kind: ProbeKind::FixedRho(opts.rho), field: 3, quantity: Quantity::Psi },
                Probe { kind: ProbeKind::FixedRho(opts.rho), field: 3, quantity: Quantity::DvPsi },
            ],
            monitors: vec![Monitor { field: 3, quantity: Quantity::DvPhi, level: F::one() }],
            ..EvolveOptions::default()
        },
    )?;
    let psi4_series = run.probes[0].samples.clone();
    let dv_psi4_series = run.probes[1].samples.clone();
    Ok(WeakNullReport {
        psi4: fit_decay(&psi4_series, &opts.fit)?,
        dv_psi4: fit_decay(&dv_psi4_series, &opts.fit)?,
        obstruction: run.monitor_hits[0],
        psi4_series,
        dv_psi4_series,
    })
}
