//! Exponent calculus: from a nonlinear wave system to its σ- and s-systems.
//!
//! `σ_i` is the growth rate of `ψ_i = r^{(n-1)/2} φ_i` towards null infinity
//! and `s_i` its decay rate towards timelike infinity.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exponent_algebra::{
    build_dependency_graph, detect_loops, is_solvable, max_system_robustness, robustness_margin,
    solve_max_system, solve_min_system_exact, AffineTerm, AlgebraError, IterationOptions,
    MaxSystem, MaxTerm, MinMaxSystem,
};
use crate::scalar::Exponent;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuleError {
    #[error("invalid system: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Derivative {
    None,
    Dt,
    Du,
    Dv,
}

impl Derivative {
    pub fn name(self) -> &'static str {
        match self {
            Derivative::None => "none",
            Derivative::Dt => "dt",
            Derivative::Du => "du",
            Derivative::Dv => "dv",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Derivative::None),
            "dt" => Some(Derivative::Dt),
            "du" => Some(Derivative::Du),
            "dv" => Some(Derivative::Dv),
            _ => None,
        }
    }

    /// Shift of the σ-rate: only `∂_v` gains a power of `v` at null infinity.
    fn g_offset<T: Exponent>(self) -> T {
        match self {
            Derivative::Dv => -T::one(),
            _ => T::zero(),
        }
    }

    /// Shift of the s-rate: any derivative gains a power of `u` at timelike
    /// infinity.
    fn h_offset<T: Exponent>(self) -> T {
        match self {
            Derivative::None => T::zero(),
            _ => T::one(),
        }
    }
}

/// `coefficient · t^{t_weight} u^{u_weight} |∂^k φ_source|^power` in the
/// equation for `φ_equation`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlinearTerm<T> {
    pub equation: usize,
    pub source: usize,
    pub derivative: Derivative,
    pub power: T,
    pub coefficient: f64,
    pub t_weight: T,
    pub u_weight: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DataKind<T> {
    Compact,
    /// Data decaying like `r^{-q}`.
    Tail(T),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataSpec<T> {
    pub kind: DataKind<T>,
    pub amplitude: f64,
    pub support: f64,
}

impl<T> DataSpec<T> {
    pub fn compact(amplitude: f64, support: f64) -> Self {
        Self { kind: DataKind::Compact, amplitude, support }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveSystem<T> {
    pub dimension: u32,
    pub fields: Vec<String>,
    pub terms: Vec<NonlinearTerm<T>>,
    /// One entry per field; `None` means no data was declared.
    pub data: Vec<Option<DataSpec<T>>>,
}

impl<T: Exponent> WaveSystem<T> {
    pub fn validate(&self) -> Result<(), RuleError> {
        let nf = self.fields.len();
        let bad = |m: String| Err(RuleError::InvalidArgument(m));
        if self.dimension < 2 {
            return bad(format!("dimension must be at least 2, got {}", self.dimension));
        }
        if nf == 0 {
            return bad("system has no fields".into());
        }
        if self.data.len() != nf {
            return bad(format!("{} data entries for {} fields", self.data.len(), nf));
        }
        for (k, t) in self.terms.iter().enumerate() {
            if t.equation >= nf || t.source >= nf {
                return bad(format!("term {k} references a field that does not exist"));
            }
            if t.power <= T::one() {
                return bad(format!("term {k} has power {} <= 1", t.power));
            }
            if !t.coefficient.is_finite() {
                return bad(format!("term {k} has a non-finite coefficient"));
            }
        }
        for (i, name) in self.fields.iter().enumerate() {
            let sourced = self.terms.iter().any(|t| t.equation == i && t.coefficient != 0.0);
            match &self.data[i] {
                None if !sourced => {
                    return bad(format!("field {name} has neither nonlinear terms nor data"))
                }
                Some(DataSpec { kind: DataKind::Tail(q), .. }) if *q <= T::zero() => {
                    return bad(format!("field {name} has tail exponent {q} <= 0"))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn half_dim(&self) -> T {
        T::ratio(self.dimension as i64 - 1, 2)
    }

    fn active_terms(&self) -> impl Iterator<Item = &NonlinearTerm<T>> {
        self.terms.iter().filter(|t| t.coefficient != 0.0)
    }
}

/// A decay rate that may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Tail<T> {
    Finite(T),
    Infinite,
}

impl<T: Exponent> Tail<T> {
    pub fn finite(&self) -> Option<&T> {
        match self {
            Tail::Finite(v) => Some(v),
            Tail::Infinite => None,
        }
    }
}

impl<T: fmt::Display> fmt::Display for Tail<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tail::Finite(v) => write!(f, "{v}"),
            Tail::Infinite => write!(f, "inf"),
        }
    }
}

/// σ- and s-contributions of one nonlinear term.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermContribution<T> {
    /// `1 - A(q-1) + α + q G` as `c + q σ_j`.
    pub sigma: MaxTerm<T>,
    /// `A(q-1) - 1 - α`.
    pub s_base: T,
    pub power: T,
    pub source: usize,
    pub g_offset: T,
    pub h_offset: T,
    pub u_weight: T,
}

impl<T: Exponent> TermContribution<T> {
    /// Rate contributed through null infinity: `s_base - q G`.
    pub fn scri_part(&self, sigma_source: &T) -> T {
        self.s_base.clone() - self.power.clone() * (sigma_source.clone() + self.g_offset.clone())
    }

    /// Exponent `q H - 1 - β` inside the timelike-infinity candidate.
    pub fn corner_exponent(&self, s_source: &T) -> T {
        self.power.clone() * (s_source.clone() + self.h_offset.clone()) - T::one() - self.u_weight.clone()
    }

    /// The s-entry `s_base + min(-q G, q H - 1 - β)` as an affine term.
    pub fn s_term(&self, sigma_source: &T, target: usize) -> AffineTerm<T> {
        let alpha = self.scri_part(sigma_source);
        let affine_const = self.s_base.clone()
            + self.power.clone() * self.h_offset.clone()
            - T::one()
            - self.u_weight.clone();
        AffineTerm::new(alpha.clone(), affine_const - alpha, self.power.clone(), target)
    }
}

pub fn term_contributions<T: Exponent>(term: &NonlinearTerm<T>, dimension: u32) -> TermContribution<T> {
    let a = T::ratio(dimension as i64 - 1, 2);
    let q = term.power.clone();
    let g_offset = term.derivative.g_offset::<T>();
    let growth = a.clone() * (q.clone() - T::one());
    TermContribution {
        sigma: MaxTerm {
            c: T::one() - growth.clone() + term.t_weight.clone() + q.clone() * g_offset.clone(),
            gamma: q.clone(),
            target: term.source,
        },
        s_base: growth - T::one() - term.t_weight.clone(),
        power: q,
        source: term.source,
        g_offset,
        h_offset: term.derivative.h_offset(),
        u_weight: term.u_weight.clone(),
    }
}

/// The σ-system of a wave system.
pub fn sigma_system<T: Exponent>(sys: &WaveSystem<T>) -> Result<MaxSystem<T>, RuleError> {
    sys.validate()?;
    let mut eqs = vec![Vec::new(); sys.fields.len()];
    for t in sys.active_terms() {
        eqs[t.equation].push(term_contributions(t, sys.dimension).sigma);
    }
    for (i, d) in sys.data.iter().enumerate() {
        if let Some(DataSpec { kind: DataKind::Tail(q), .. }) = d {
            eqs[i].push(MaxTerm { c: T::one() - q.clone(), gamma: T::zero(), target: i });
        }
    }
    Ok(MaxSystem::new(eqs)?)
}

/// The s-system for a given σ. Components are the fields with finite
/// s-rate, listed in `finite`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SSystem<T> {
    pub system: MinMaxSystem<T>,
    pub finite: Vec<usize>,
}

/// Fields whose s-rate is `+∞`: no sourcing terms and compact data, in odd
/// dimension.
pub fn infinite_fields<T: Exponent>(sys: &WaveSystem<T>) -> Vec<bool> {
    (0..sys.fields.len())
        .map(|i| {
            sys.dimension % 2 == 1
                && !sys.active_terms().any(|t| t.equation == i)
                && !matches!(sys.data[i], Some(DataSpec { kind: DataKind::Tail(_), .. }))
        })
        .collect()
}

pub fn s_system<T: Exponent>(sys: &WaveSystem<T>, sigma: &[T]) -> Result<SSystem<T>, RuleError> {
    sys.validate()?;
    let infinite = infinite_fields(sys);
    let finite: Vec<usize> = (0..sys.fields.len()).filter(|&i| !infinite[i]).collect();
    let index = |field: usize| finite.iter().position(|&f| f == field);
    let mut eqs: Vec<Vec<AffineTerm<T>>> = vec![Vec::new(); finite.len()];
    for t in sys.active_terms() {
        let Some(row) = index(t.equation) else { continue };
        let c = term_contributions(t, sys.dimension);
        match index(t.source) {
            Some(col) => eqs[row].push(c.s_term(&sigma[t.source], col)),
            None => eqs[row].push(AffineTerm::constant(c.scri_part(&sigma[t.source]), row)),
        }
    }
    for (row, &field) in finite.iter().enumerate() {
        if let Some(DataSpec { kind: DataKind::Tail(q), .. }) = &sys.data[field] {
            eqs[row].push(AffineTerm::constant(q.clone() - T::one(), row));
        }
        if sys.dimension % 2 == 0 {
            eqs[row].push(AffineTerm::constant(sys.half_dim(), row));
        }
    }
    Ok(SSystem { system: MinMaxSystem::new(eqs)?, finite })
}

/// σ-system, and the s-system at the least σ when σ is bounded.
pub fn derive_systems<T: Exponent>(
    sys: &WaveSystem<T>,
) -> Result<(MaxSystem<T>, Option<SSystem<T>>), RuleError> {
    let sigma_sys = sigma_system(sys)?;
    let rep = solve_max_system(&sigma_sys, &IterationOptions::default());
    let s = match rep.solution {
        Some(sigma) => Some(s_system(sys, &sigma)?),
        None => None,
    };
    Ok((sigma_sys, s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ExpectedStable,
    ExpectedUnstable,
    Borderline,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::ExpectedStable => "expected-stable",
            Verdict::ExpectedUnstable => "expected-unstable",
            Verdict::Borderline => "borderline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct LogFlags {
    /// A forcing at null infinity decays like `v^{-1}`.
    pub scri: bool,
    /// A forcing near the corner decays like `u^{-1}`.
    pub corner: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification<T> {
    pub verdict: Verdict,
    pub sigma: Option<Vec<T>>,
    pub s: Option<Vec<Tail<T>>>,
    pub log_flags: Vec<LogFlags>,
    /// Cyclic components of the s-dependency graph, as field indices.
    pub loops: Vec<Vec<usize>>,
    pub sigma_robust: bool,
    pub s_robust: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyOptions<T> {
    pub epsilon: T,
    pub max_iter: usize,
}

impl<T: Exponent> Default for ClassifyOptions<T> {
    fn default() -> Self {
        Self { epsilon: T::ratio(1, 1_000_000), max_iter: 1000 }
    }
}

fn raised<T: Exponent>(sys: &MinMaxSystem<T>, eps: &T, skip_first: bool) -> Vec<MinMaxSystem<T>> {
    let mut eqs = sys.equations().to_vec();
    let mut gammas = Vec::new();
    for (i, eq) in eqs.iter_mut().enumerate() {
        for (k, t) in eq.iter_mut().enumerate() {
            if skip_first && k == 0 {
                continue;
            }
            t.alpha = t.alpha.clone() + eps.clone();
            t.beta = t.beta.clone() + eps.clone();
            if t.gamma > T::zero() {
                gammas.push((i, k));
            }
        }
    }
    let n = gammas.len().min(12);
    (0..1u64 << n)
        .map(|mask| {
            let mut e = eqs.clone();
            for (bit, &(i, k)) in gammas.iter().take(n).enumerate() {
                let g = &mut e[i][k].gamma;
                *g = if mask >> bit & 1 == 1 {
                    g.clone() + eps.clone()
                } else {
                    T::max_of(g.clone() - eps.clone(), T::zero())
                };
            }
            MinMaxSystem::new(e).expect("perturbation keeps the system valid")
        })
        .collect()
}

/// Does some favourable `ε`-perturbation of an unsolvable system become
/// solvable?
fn rescued<T: Exponent>(sys: &MinMaxSystem<T>, eps: &T, skip_first: bool, opts: &IterationOptions<T>) -> bool {
    raised(sys, eps, skip_first)
        .iter()
        .any(|p| is_solvable(p, opts))
}

/// Stable iff σ is bounded, the s-system is solvable, and both survive every
/// `±ε` perturbation. A verdict that flips inside the `ε`-box is borderline.
pub fn classify<T: Exponent>(
    sys: &WaveSystem<T>,
    options: &ClassifyOptions<T>,
) -> Result<Classification<T>, RuleError> {
    let eps = &options.epsilon;
    let iter = IterationOptions { max_iter: options.max_iter, divergence_bound: None };
    let sigma_sys = sigma_system(sys)?;
    let nf = sys.fields.len();
    let sigma_rep = solve_max_system(&sigma_sys, &iter);
    let Some(sigma) = sigma_rep.solution else {
        let fragile = rescued(&sigma_sys.negated(), eps, true, &iter);
        return Ok(Classification {
            verdict: if fragile { Verdict::Borderline } else { Verdict::ExpectedUnstable },
            sigma: None,
            s: None,
            log_flags: vec![LogFlags::default(); nf],
            loops: Vec::new(),
            sigma_robust: false,
            s_robust: false,
        });
    };
    let sigma_robust = max_system_robustness(&sigma_sys, eps).robust;
    let ss = s_system(sys, &sigma)?;
    let s_rep = solve_min_system_exact(&ss.system, &iter);
    let mut log_flags = vec![LogFlags::default(); nf];
    let Some(s_finite) = s_rep.solution else {
        // Only a rescue of the s-system can make the verdict stable; a σ tie
        // on its own does not.
        let fragile = rescued(&ss.system, eps, false, &iter);
        return Ok(Classification {
            verdict: if fragile { Verdict::Borderline } else { Verdict::ExpectedUnstable },
            sigma: Some(sigma),
            s: None,
            log_flags,
            loops: Vec::new(),
            sigma_robust,
            s_robust: false,
        });
    };
    let s_robust = robustness_margin(&ss.system, eps).robust;
    let mut s = vec![Tail::Infinite; nf];
    for (row, &field) in ss.finite.iter().enumerate() {
        s[field] = Tail::Finite(s_finite[row].clone());
    }
    for t in sys.active_terms() {
        let c = term_contributions(t, sys.dimension);
        let sig_entry = c.sigma.c.clone() + c.sigma.gamma.clone() * sigma[t.source].clone();
        if sig_entry.is_zero() && sigma[t.equation].is_zero() {
            log_flags[t.equation].scri = true;
        }
        if let Tail::Finite(sj) = &s[t.source] {
            if c.corner_exponent(sj).is_zero() {
                log_flags[t.equation].corner = true;
            }
        }
    }
    let graph = build_dependency_graph(&ss.system, &s_finite)?;
    let loops = detect_loops(&graph)
        .into_iter()
        .map(|comp| comp.into_iter().map(|r| ss.finite[r]).collect())
        .collect();
    let verdict = if sigma_robust && s_robust { Verdict::ExpectedStable } else { Verdict::Borderline };
    Ok(Classification {
        verdict,
        sigma: Some(sigma),
        s: Some(s),
        log_flags,
        loops,
        sigma_robust,
        s_robust,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForcingRegion {
    /// Forcing on `N_0`, decaying like `v^{-Q}` there.
    NearOrigin,
    /// Forcing near null infinity.
    NullInfinity,
    /// Forcing near timelike infinity.
    TimelikeInfinity,
    /// Forcing with compact support.
    Compact,
}

/// Induced rates of `ψ` on the three asymptotic regions; `None` means no
/// support there.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow<T> {
    pub near_origin: Option<T>,
    pub null_infinity: T,
    pub timelike: Tail<T>,
}

/// The rates induced on `ψ` by a forcing `F ~ v^{-Q}` supported in `region`.
pub fn tail_from_forcing<T: Exponent>(region: ForcingRegion, q: &T, dimension: u32) -> TableRow<T> {
    let a = T::ratio(dimension as i64 - 1, 2);
    let two = T::int(2);
    let q = q.clone();
    match region {
        ForcingRegion::NearOrigin => {
            let v = q - a - two;
            TableRow {
                near_origin: Some(v.clone()),
                null_infinity: T::min_of(T::zero(), v.clone()),
                timelike: Tail::Finite(v),
            }
        }
        ForcingRegion::NullInfinity => {
            let v = q - a - T::one();
            TableRow { near_origin: None, null_infinity: T::min_of(T::zero(), v.clone()), timelike: Tail::Finite(v) }
        }
        ForcingRegion::TimelikeInfinity => TableRow {
            near_origin: None,
            null_infinity: T::zero(),
            timelike: Tail::Finite(q - a - two),
        },
        ForcingRegion::Compact => TableRow {
            near_origin: None,
            null_infinity: T::zero(),
            timelike: if dimension % 2 == 0 { Tail::Finite(a) } else { Tail::Infinite },
        },
    }
}
