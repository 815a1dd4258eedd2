//! Spherically symmetric evolution of `ψ_i = r φ_i` in three space
//! dimensions on a characteristic grid `u = (t-r)/2`, `v = (t+r)/2`, where the
//! wave operator becomes `∂_u ∂_v`.
//!
//! Each cell is updated by `ψ_NE = ψ_NW + ψ_SE - ψ_SW + Δu Δv S` with the
//! source at the cell centre. Derivative sources take one predictor-corrector
//! pass on `ψ_NE`. The homogeneous update is exact, so compactly supported
//! linear data obey Huygens' principle to rounding.

mod experiments;
mod fit;
mod grid;
mod output;

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

pub use experiments::{
    detect_blowup, moment_series, weak_null_chain, BlowupCertificate, BlowupOptions, WeakNullOptions,
    WeakNullReport,
};
pub use fit::{fit_decay, loglog_slope, DecayFit, FitOptions};
pub use grid::Grid;
pub use output::{read_snapshot, write_probe_csv, write_snapshot, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};

use crate::decay_rules::{DataKind, Derivative, WaveSystem};
use crate::kernels1d::ForcingFn;
use crate::scalar::{Exponent, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical instability: {0}")]
    NumericalInstability(String),
    #[error("insufficient range for a fit: {0}")]
    InsufficientRange(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimTerm<F> {
    pub equation: usize,
    pub source: usize,
    pub derivative: Derivative,
    pub power: F,
    pub coefficient: F,
    pub t_weight: F,
    pub u_weight: F,
}

/// Right-hand sides `□φ_i = Σ c (1+t)^α (1+|u|)^β |∂^k φ_j|^q + r^{-1} F_i(u,v)`.
/// The extra forcing `F_i` acts directly on `∂_u ∂_v ψ_i`.
#[derive(Clone)]
pub struct SimSystem<F> {
    pub fields: usize,
    pub terms: Vec<SimTerm<F>>,
    pub forcing: Vec<Option<ForcingFn<F>>>,
}

impl<F: Real> SimSystem<F> {
    pub fn new(fields: usize, terms: Vec<SimTerm<F>>) -> Result<Self, SimError> {
        let sys = Self { fields, terms, forcing: vec![None; fields] };
        sys.validate()?;
        Ok(sys)
    }

    pub fn homogeneous(fields: usize) -> Self {
        Self { fields, terms: Vec::new(), forcing: vec![None; fields] }
    }

    pub fn with_forcing(mut self, field: usize, f: impl Fn(F, F) -> F + Send + Sync + 'static) -> Self {
        self.forcing[field] = Some(Arc::new(f));
        self
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.fields == 0 {
            return Err(SimError::Config("no fields".into()));
        }
        for (k, t) in self.terms.iter().enumerate() {
            if t.equation >= self.fields || t.source >= self.fields {
                return Err(SimError::Config(format!("term {k} references a missing field")));
            }
            if !(t.power >= F::one()) || !t.coefficient.is_finite() {
                return Err(SimError::Config(format!("term {k} has an invalid power or coefficient")));
            }
        }
        Ok(())
    }

    fn is_linear(&self) -> bool {
        self.terms.iter().all(|t| t.coefficient == F::zero())
    }

    fn has_derivatives(&self) -> bool {
        self.terms.iter().any(|t| t.derivative != Derivative::None)
    }

    /// Only three space dimensions are simulated.
    pub fn from_wave_system<T: Exponent>(sys: &WaveSystem<T>) -> Result<Self, SimError> {
        sys.validate().map_err(|e| SimError::Config(e.to_string()))?;
        if sys.dimension != 3 {
            return Err(SimError::Config(format!(
                "the simulator runs in three space dimensions, got {}",
                sys.dimension
            )));
        }
        let conv = |x: &T| F::c(x.to_f64_lossy());
        let terms = sys
            .terms
            .iter()
            .map(|t| SimTerm {
                equation: t.equation,
                source: t.source,
                derivative: t.derivative,
                power: conv(&t.power),
                coefficient: F::c(t.coefficient),
                t_weight: conv(&t.t_weight),
                u_weight: conv(&t.u_weight),
            })
            .collect();
        SimSystem::new(sys.fields.len(), terms)
    }
}

/// `φ_0 = a_0 b(r/R)`, `φ_1 = a_1 b(r/R)` with the bump
/// `b(x) = exp(1 - 1/(1-x^2))` on `|x| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DataProfile<F> {
    pub phi0: F,
    pub phi1: F,
    pub radius: F,
}

impl<F: Real> DataProfile<F> {
    pub fn zero() -> Self {
        Self { phi0: F::zero(), phi1: F::zero(), radius: F::one() }
    }

    pub fn bump(phi0: F, phi1: F, radius: F) -> Self {
        Self { phi0, phi1, radius }
    }

    fn b(&self, r: F) -> F {
        let x = r / self.radius;
        let x2 = x * x;
        if x2 >= F::one() {
            F::zero()
        } else {
            (F::one() - F::one() / (F::one() - x2)).exp()
        }
    }

    pub fn phi0_at(&self, r: F) -> F {
        self.phi0 * self.b(r.abs())
    }

    pub fn phi1_at(&self, r: F) -> F {
        self.phi1 * self.b(r.abs())
    }

    /// Odd extension of `r φ_0`.
    fn psi0(&self, x: F) -> F {
        x * self.phi0_at(x)
    }

    fn psi1(&self, x: F) -> F {
        x * self.phi1_at(x)
    }

    fn dphi0(&self, r: F) -> F {
        let d = F::c(1e-6) * self.radius;
        (self.phi0_at(r + d) - self.phi0_at(r - d)) / (d + d)
    }
}

pub fn data_from_wave_system<F: Real, T: Exponent>(sys: &WaveSystem<T>) -> Result<Vec<DataProfile<F>>, SimError> {
    sys.data
        .iter()
        .enumerate()
        .map(|(i, d)| match d {
            None => Ok(DataProfile::zero()),
            Some(spec) => match spec.kind {
                DataKind::Compact => Ok(DataProfile::bump(F::c(spec.amplitude), F::zero(), F::c(spec.support))),
                DataKind::Tail(_) => Err(SimError::Config(format!(
                    "field {} has non-compact data; the simulator needs compact support",
                    sys.fields[i]
                ))),
            },
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Psi,
    Phi,
    DvPsi,
    DvPhi,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Psi => "psi",
            Quantity::Phi => "phi",
            Quantity::DvPsi => "dv_psi",
            Quantity::DvPhi => "dv_phi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind<F> {
    FixedR(F),
    FixedRho(F),
    /// Along the outgoing null line `u = u0`, parametrised by `t`.
    Scri(F),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Probe<F> {
    pub kind: ProbeKind<F>,
    pub field: usize,
    pub quantity: Quantity,
}

impl<F: Real> Probe<F> {
    pub fn label(&self) -> String {
        let (k, p) = match self.kind {
            ProbeKind::FixedR(x) => ("r", x),
            ProbeKind::FixedRho(x) => ("rho", x),
            ProbeKind::Scri(x) => ("u", x),
        };
        format!("{}{}_{}{}", self.quantity.name(), self.field, k, p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeSeries<F> {
    pub probe: Probe<F>,
    pub samples: Vec<(F, F)>,
}

/// First point where `|quantity| >= level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Monitor<F> {
    pub field: usize,
    pub quantity: Quantity,
    pub level: F,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpacetimePoint<F> {
    pub t: F,
    pub u: F,
    pub v: F,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupEvent<F> {
    pub point: SpacetimePoint<F>,
    pub field: usize,
}

#[derive(Debug, Clone)]
pub struct EvolveOptions<F> {
    pub probes: Vec<Probe<F>>,
    /// Times at which `H_i(t) = ∫ ψ_i dr` is recorded.
    pub moment_times: Vec<F>,
    /// Absolute `|φ|` level treated as blow-up; points past it are discarded.
    pub blowup_threshold: Option<F>,
    pub monitors: Vec<Monitor<F>>,
    pub samples_per_decade: usize,
    /// Keep every k-th row for a snapshot.
    pub snapshot_stride: Option<usize>,
}

impl<F: Real> Default for EvolveOptions<F> {
    fn default() -> Self {
        Self {
            probes: Vec::new(),
            moment_times: Vec::new(),
            blowup_threshold: None,
            monitors: Vec::new(),
            samples_per_decade: 40,
            snapshot_stride: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotRow<F> {
    pub u: F,
    pub v: Vec<F>,
    /// Field-major: `psi[f][k]` at `v[k]`.
    pub psi: Vec<Vec<F>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evolution<F> {
    pub probes: Vec<ProbeSeries<F>>,
    /// Per field, `(t, H(t))`.
    pub moments: Vec<Vec<(F, F)>>,
    pub blowup: Option<BlowupEvent<F>>,
    pub monitor_hits: Vec<Option<SpacetimePoint<F>>>,
    pub max_abs_psi: Vec<F>,
    pub cells: usize,
    pub snapshot: Vec<SnapshotRow<F>>,
    pub h: F,
}

struct Thinner<F> {
    per_decade: F,
    last: Option<F>,
}

impl<F: Real> Thinner<F> {
    fn new(per_decade: usize) -> Self {
        Self { per_decade: F::c(per_decade.max(1) as f64), last: None }
    }

    fn admit(&mut self, t: F) -> bool {
        if t <= F::zero() {
            return false;
        }
        let l = t.log10();
        match self.last {
            Some(prev) if (l - prev) * self.per_decade < F::one() => false,
            _ => {
                self.last = Some(l);
                true
            }
        }
    }
}

struct MomentAcc<F> {
    t: F,
    sum: F,
    prev: Option<(F, F)>,
    done: bool,
    valid: bool,
}

/// Row-wise workspace: values for all fields at every node index.
struct Row<F> {
    u: F,
    start: usize,
    end: usize,
    psi: Vec<F>,
}

impl<F: Real> Row<F> {
    fn get(&self, j: usize, f: usize, nf: usize) -> F {
        if j < self.start || j > self.end {
            F::zero()
        } else {
            self.psi[j * nf + f]
        }
    }
}

struct Ctx<'a, F> {
    sys: &'a SimSystem<F>,
    r_min: F,
}

impl<'a, F: Real> Ctx<'a, F> {
    fn weight(&self, term: &SimTerm<F>, t: F, u: F) -> F {
        let mut w = F::one();
        if term.t_weight != F::zero() {
            w = w * (F::one() + t).powf(term.t_weight);
        }
        if term.u_weight != F::zero() {
            w = w * (F::one() + u.abs()).powf(term.u_weight);
        }
        w
    }

    fn pow(x: F, q: F) -> F {
        let a = x.abs();
        if q == F::c(2.0) {
            a * a
        } else if q == F::c(3.0) {
            a * a * a
        } else {
            a.powf(q)
        }
    }

    /// `∂_u ∂_v ψ_i` at a point with centre values `psi`, `du_psi`, `dv_psi`.
    fn source(&self, out: &mut [F], u: F, v: F, psi: &[F], du: &[F], dv: &[F]) {
        let r = v - u;
        let t = u + v;
        for (i, o) in out.iter_mut().enumerate() {
            *o = match &self.sys.forcing[i] {
                Some(f) => f(u, v),
                None => F::zero(),
            };
        }
        for term in &self.sys.terms {
            if term.coefficient == F::zero() {
                continue;
            }
            let j = term.source;
            let d = match term.derivative {
                Derivative::None => psi[j] / r,
                Derivative::Dt => (du[j] + dv[j]) * F::c(0.5) / r,
                Derivative::Du => du[j] / r + psi[j] / (r * r),
                Derivative::Dv => dv[j] / r - psi[j] / (r * r),
            };
            out[term.equation] =
                out[term.equation] + term.coefficient * self.weight(term, t, u) * r * Self::pow(d, term.power);
        }
    }

    fn guarded_r(&self, r: F) -> F {
        r.max(self.r_min)
    }
}

/// Node-wise quantity on a row, using in-row differences for `∂_v`.
fn row_quantity<F: Real>(row: &Row<F>, nodes: &[F], j: usize, f: usize, nf: usize, q: Quantity, r_min: F) -> F {
    let u = row.u;
    let v = nodes[j];
    let r = (v - u).max(r_min);
    let psi = row.get(j, f, nf);
    let dv = || {
        let (a, b) = (j.max(row.start + 1) - 1, (j + 1).min(row.end));
        if b <= a {
            return F::zero();
        }
        if a < j && j < b {
            let (x0, x1, x2) = (nodes[a], nodes[j], nodes[b]);
            let (y0, y1, y2) = (row.get(a, f, nf), psi, row.get(b, f, nf));
            let h0 = x1 - x0;
            let h1 = x2 - x1;
            -h1 / (h0 * (h0 + h1)) * y0 + (h1 - h0) / (h0 * h1) * y1 + h0 / (h1 * (h0 + h1)) * y2
        } else {
            (row.get(b, f, nf) - row.get(a, f, nf)) / (nodes[b] - nodes[a])
        }
    };
    match q {
        Quantity::Psi => psi,
        Quantity::Phi => psi / r,
        Quantity::DvPsi => dv(),
        Quantity::DvPhi => dv() / r - psi / (r * r),
    }
}

fn interp_row<F: Real>(row: &Row<F>, nodes: &[F], v: F, f: usize, nf: usize, q: Quantity, r_min: F) -> Option<F> {
    if row.end <= row.start || v < nodes[row.start] || v > nodes[row.end] {
        return None;
    }
    let k = match nodes[row.start..=row.end].binary_search_by(|x| x.partial_cmp(&v).expect("finite")) {
        Ok(k) => return Some(row_quantity(row, nodes, row.start + k, f, nf, q, r_min)).filter(|x| x.is_finite()),
        Err(k) => row.start + k,
    };
    let (a, b) = (k - 1, k);
    let ya = row_quantity(row, nodes, a, f, nf, q, r_min);
    let yb = row_quantity(row, nodes, b, f, nf, q, r_min);
    let w = (v - nodes[a]) / (nodes[b] - nodes[a]);
    let y = ya + (yb - ya) * w;
    y.is_finite().then_some(y)
}

fn simpson<F: Real>(f: impl Fn(F) -> F, a: F, b: F) -> F {
    let n = 16;
    let h = (b - a) / F::c(n as f64);
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { F::c(4.0) } else { F::c(2.0) };
        s = s + w * f(a + h * F::c(k as f64));
    }
    s * h / F::c(3.0)
}

/// Runs the characteristic scheme over the grid.
pub fn evolve<F: Real>(
    sys: &SimSystem<F>,
    data: &[DataProfile<F>],
    grid: &Grid<F>,
    opts: &EvolveOptions<F>,
) -> Result<Evolution<F>, SimError> {
    sys.validate()?;
    grid.validate()?;
    let nf = sys.fields;
    if data.len() != nf {
        return Err(SimError::Config(format!("{} data profiles for {} fields", data.len(), nf)));
    }
    for p in &opts.probes {
        if p.field >= nf {
            return Err(SimError::Config(format!("probe on missing field {}", p.field)));
        }
        if let ProbeKind::FixedRho(rho) = p.kind {
            if !(rho > F::zero() && rho < F::one()) {
                return Err(SimError::Config(format!("fixed-rho probe needs 0 < rho < 1, got {rho}")));
            }
        }
    }
    let support = data.iter().map(|d| d.radius).fold(F::zero(), F::max);
    let nodes = grid.nodes(support)?;
    let h = grid.h;
    let ctx = Ctx { sys, r_min: h * F::c(0.5) };
    let idx_of = |x: F| -> usize {
        match nodes.binary_search_by(|y| y.partial_cmp(&x).expect("finite")) {
            Ok(k) => k,
            Err(k) => k,
        }
    };
    let v_end = nodes.iter().rposition(|&x| x <= grid.v_max).unwrap_or(0);
    let derivs = sys.has_derivatives();
    let linear = sys.is_linear() && sys.forcing.iter().all(|f| f.is_none());
    let half = F::c(0.5);

    let mut probes: Vec<ProbeSeries<F>> =
        opts.probes.iter().map(|&p| ProbeSeries { probe: p, samples: Vec::new() }).collect();
    let mut thinners: Vec<Thinner<F>> = opts.probes.iter().map(|_| Thinner::new(opts.samples_per_decade)).collect();
    let scri_rows: Vec<Option<usize>> = opts
        .probes
        .iter()
        .map(|p| match p.kind {
            ProbeKind::Scri(u0) => Some(idx_of(u0)),
            _ => None,
        })
        .collect();
    let mut moments: Vec<Vec<MomentAcc<F>>> = (0..nf)
        .map(|_| {
            opts.moment_times
                .iter()
                .map(|&t| MomentAcc { t, sum: F::zero(), prev: None, done: false, valid: true })
                .collect()
        })
        .collect();
    let mut monitor_hits: Vec<Option<SpacetimePoint<F>>> = vec![None; opts.monitors.len()];
    let mut blowup: Option<BlowupEvent<F>> = None;
    let mut max_abs = vec![F::zero(); nf];
    let mut cells = 0usize;
    let mut snapshot = Vec::new();

    let n_nodes = nodes.len();
    let mut prev = Row { u: nodes[0] - h, start: 1, end: 0, psi: vec![F::zero(); n_nodes * nf] };
    let mut cur = Row { u: nodes[0], start: 0, end: 0, psi: vec![F::zero(); n_nodes * nf] };

    let mut s_buf = vec![F::zero(); nf];
    let mut psi_c = vec![F::zero(); nf];
    let mut du_c = vec![F::zero(); nf];
    let mut dv_c = vec![F::zero(); nf];
    let mut ne = vec![F::zero(); nf];
    let mut initial_max = F::zero();

    let u_end = nodes.iter().rposition(|&x| x <= grid.u_max).unwrap_or(0);
    for i in 0..=u_end {
        let u = nodes[i];
        let v_lo = u.max(-u);
        let js = idx_of(v_lo);
        if js > v_end || (nodes[js] - v_lo).abs() > h * F::c(1e-9) {
            break;
        }
        cur.u = u;
        cur.start = js;
        cur.end = v_end;
        let mut alive_any = false;
        for j in js..=v_end {
            let v = nodes[j];
            let t = u + v;
            let r = v - u;
            let base = j * nf;
            if r == F::zero() && u >= F::zero() {
                for f in 0..nf {
                    cur.psi[base + f] = F::zero();
                }
                alive_any = true;
                continue;
            }
            if j == js && u < F::zero() {
                for f in 0..nf {
                    cur.psi[base + f] = data[f].psi0(r);
                    initial_max = initial_max.max(cur.psi[base + f].abs());
                }
                alive_any = true;
                continue;
            }
            if j == js + 1 && u <= F::zero() && (t - h).abs() <= h * F::c(1e-9) {
                // Second diagonal t = h: d'Alembert plus the source at t = 0.
                for f in 0..nf {
                    psi_c[f] = data[f].psi0(r);
                    let dphi0 = data[f].dphi0(r);
                    // ∂_u φ and ∂_v φ at t = 0 from (φ_0, φ_1).
                    du_c[f] = data[f].phi1_at(r) - dphi0;
                    dv_c[f] = data[f].phi1_at(r) + dphi0;
                }
                let (u0, v0) = (-r * half, r * half);
                // Convert φ-derivatives into ψ-derivatives so `source` can use them.
                for f in 0..nf {
                    let phi = psi_c[f] / r;
                    du_c[f] = (du_c[f] - phi / r) * r;
                    dv_c[f] = (dv_c[f] + phi / r) * r;
                }
                ctx.source(&mut s_buf, u0, v0, &psi_c, &du_c, &dv_c);
                for f in 0..nf {
                    let d = &data[f];
                    let hom = (d.psi0(r + h) + d.psi0(r - h)) * half + simpson(|x| d.psi1(x), r - h, r + h) * half;
                    cur.psi[base + f] = hom + h * h * half * s_buf[f];
                    initial_max = initial_max.max(cur.psi[base + f].abs());
                }
                alive_any = true;
                continue;
            }
            // Cell with corners SW (i-1, j-1), NW (i-1, j), SE (i, j-1).
            cells += 1;
            let du = u - prev.u;
            let dv = v - nodes[j - 1];
            let uc = u - du * half;
            let vc = v - dv * half;
            let mut dead = false;
            for f in 0..nf {
                let sw = prev.get(j - 1, f, nf);
                let nw = prev.get(j, f, nf);
                let se = cur.get(j - 1, f, nf);
                if !(sw.is_finite() && nw.is_finite() && se.is_finite()) {
                    dead = true;
                }
                psi_c[f] = (nw + se) * half;
                du_c[f] = (se - sw) / du;
                dv_c[f] = (nw - sw) / dv;
            }
            if dead {
                for f in 0..nf {
                    cur.psi[base + f] = F::nan();
                }
                continue;
            }
            ctx.source(&mut s_buf, uc, vc, &psi_c, &du_c, &dv_c);
            for f in 0..nf {
                let sw = prev.get(j - 1, f, nf);
                let nw = prev.get(j, f, nf);
                let se = cur.get(j - 1, f, nf);
                ne[f] = nw + se - sw + du * dv * s_buf[f];
            }
            if derivs {
                for f in 0..nf {
                    let sw = prev.get(j - 1, f, nf);
                    let nw = prev.get(j, f, nf);
                    let se = cur.get(j - 1, f, nf);
                    du_c[f] = (se - sw + ne[f] - nw) / (du + du);
                    dv_c[f] = (nw - sw + ne[f] - se) / (dv + dv);
                }
                ctx.source(&mut s_buf, uc, vc, &psi_c, &du_c, &dv_c);
                for f in 0..nf {
                    let sw = prev.get(j - 1, f, nf);
                    let nw = prev.get(j, f, nf);
                    let se = cur.get(j - 1, f, nf);
                    ne[f] = nw + se - sw + du * dv * s_buf[f];
                }
            }
            for f in 0..nf {
                let val = ne[f];
                if !val.is_finite() {
                    return Err(SimError::NumericalInstability(format!(
                        "non-finite value in field {f} at t = {t}, r = {r}"
                    )));
                }
                let phi = val / ctx.guarded_r(r);
                if let Some(th) = opts.blowup_threshold {
                    if phi.abs() > th {
                        if blowup.map_or(true, |b| t < b.point.t) {
                            blowup = Some(BlowupEvent { point: SpacetimePoint { t, u, v }, field: f });
                        }
                        for g in 0..nf {
                            cur.psi[base + g] = F::nan();
                        }
                        break;
                    }
                }
                cur.psi[base + f] = val;
                max_abs[f] = max_abs[f].max(val.abs());
            }
            if cur.psi[base].is_finite() {
                alive_any = true;
            }
        }
        if linear && initial_max > F::zero() {
            let m = max_abs.iter().copied().fold(F::zero(), F::max);
            if m > F::c(1e3) * initial_max {
                return Err(SimError::NumericalInstability(format!(
                    "linear evolution grew by {} over its data",
                    m / initial_max
                )));
            }
        }

        // Probes.
        for (k, p) in opts.probes.iter().enumerate() {
            let target = match p.kind {
                ProbeKind::FixedR(r0) => Some(u + r0),
                ProbeKind::FixedRho(rho) if u > F::zero() => Some(u * (F::one() + rho) / (F::one() - rho)),
                _ => None,
            };
            if let Some(vt) = target {
                if let Some(y) = interp_row(&cur, &nodes, vt, p.field, nf, p.quantity, ctx.r_min) {
                    let t = u + vt;
                    if thinners[k].admit(t) {
                        probes[k].samples.push((t, y));
                    }
                }
            }
            if scri_rows[k] == Some(i) {
                for j in js..=v_end {
                    let y = row_quantity(&cur, &nodes, j, p.field, nf, p.quantity, ctx.r_min);
                    let t = u + nodes[j];
                    if y.is_finite() && thinners[k].admit(t) {
                        probes[k].samples.push((t, y));
                    }
                }
            }
        }
        // Moments: H(t) = 2 ∫ ψ(u, t-u) du over u up to the axis t/2.
        for (f, accs) in moments.iter_mut().enumerate() {
            for acc in accs.iter_mut().filter(|a| !a.done && a.valid) {
                let ua = acc.t * half;
                if u >= ua {
                    let (pu, pv) = acc.prev.unwrap_or((ua, F::zero()));
                    acc.sum = acc.sum + (ua - pu) * pv;
                    acc.done = true;
                    continue;
                }
                let vt = acc.t - u;
                if vt > nodes[v_end] {
                    acc.valid = false;
                    continue;
                }
                let Some(y) = interp_row(&cur, &nodes, vt, f, nf, Quantity::Psi, ctx.r_min) else {
                    if vt >= nodes[js] {
                        acc.valid = false;
                    }
                    continue;
                };
                if let Some((pu, pv)) = acc.prev {
                    acc.sum = acc.sum + (u - pu) * (pv + y);
                }
                acc.prev = Some((u, y));
            }
        }
        // Monitors.
        for (k, m) in opts.monitors.iter().enumerate() {
            for j in js..=v_end {
                let y = row_quantity(&cur, &nodes, j, m.field, nf, m.quantity, ctx.r_min);
                if y.is_finite() && y.abs() >= m.level {
                    let t = u + nodes[j];
                    if monitor_hits[k].map_or(true, |p| t < p.t) {
                        monitor_hits[k] = Some(SpacetimePoint { t, u, v: nodes[j] });
                    }
                    break;
                }
            }
        }
        if let Some(stride) = opts.snapshot_stride {
            if stride > 0 && i % stride == 0 {
                snapshot.push(SnapshotRow {
                    u,
                    v: nodes[js..=v_end].to_vec(),
                    psi: (0..nf).map(|f| (js..=v_end).map(|j| cur.psi[j * nf + f]).collect()).collect(),
                });
            }
        }
        std::mem::swap(&mut prev, &mut cur);
        if !alive_any {
            break;
        }
    }

    let moments = moments
        .into_iter()
        .map(|accs| accs.into_iter().filter(|a| a.done && a.valid).map(|a| (a.t, a.sum)).collect())
        .collect();
    Ok(Evolution { probes, moments, blowup, monitor_hits, max_abs_psi: max_abs, cells, snapshot, h })
}
