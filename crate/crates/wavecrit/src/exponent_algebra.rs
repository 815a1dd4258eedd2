//! Min/max fixed-point systems over an ordered field.
//!
//! A min-system has equations `x_i = min_j(α_ij, α_ij + β_ij + γ_ij x_j)`; a
//! max-system has `σ_i = max(0, max_t(c_t + γ_t σ_{j_t}))`. Iteration is the
//! fast path; an exact Fourier–Motzkin oracle decides anything the iteration
//! leaves open.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::scalar::Exponent;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("vector is not a fixed point of equation {0}")]
    NotAFixedPoint(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineTerm<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    pub target: usize,
}

impl<T: Exponent> AffineTerm<T> {
    pub fn new(alpha: T, beta: T, gamma: T, target: usize) -> Self {
        Self { alpha, beta, gamma, target }
    }

    /// A term that always evaluates to `value`.
    pub fn constant(value: T, target: usize) -> Self {
        Self { alpha: value, beta: T::zero(), gamma: T::zero(), target }
    }

    fn affine(&self, x: &[T]) -> T {
        self.alpha.clone() + self.beta.clone() + self.gamma.clone() * x[self.target].clone()
    }

    fn value(&self, x: &[T]) -> T {
        T::min_of(self.alpha.clone(), self.affine(x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinMaxSystem<T> {
    equations: Vec<Vec<AffineTerm<T>>>,
}

impl<T: Exponent> MinMaxSystem<T> {
    pub fn new(equations: Vec<Vec<AffineTerm<T>>>) -> Result<Self, AlgebraError> {
        let d = equations.len();
        if d == 0 {
            return Err(AlgebraError::InvalidArgument("system has no equations".into()));
        }
        for (i, eq) in equations.iter().enumerate() {
            if eq.is_empty() {
                return Err(AlgebraError::InvalidArgument(format!("equation {i} has no terms")));
            }
            for t in eq {
                if t.target >= d {
                    return Err(AlgebraError::InvalidArgument(format!(
                        "equation {i} references unknown component {}",
                        t.target
                    )));
                }
                if t.gamma < T::zero() {
                    return Err(AlgebraError::InvalidArgument(format!(
                        "equation {i} has negative coefficient gamma = {}",
                        t.gamma
                    )));
                }
                for v in [&t.alpha, &t.beta, &t.gamma] {
                    if v.to_f64().map_or(true, |f| f.is_nan()) {
                        return Err(AlgebraError::InvalidArgument(format!(
                            "equation {i} has a non-finite coefficient"
                        )));
                    }
                }
            }
        }
        Ok(Self { equations })
    }

    pub fn dim(&self) -> usize {
        self.equations.len()
    }

    pub fn equations(&self) -> &[Vec<AffineTerm<T>>] {
        &self.equations
    }

    /// `F[x]`.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        self.equations
            .iter()
            .map(|eq| {
                eq.iter()
                    .map(|t| t.value(x))
                    .reduce(T::min_of)
                    .expect("non-empty equation")
            })
            .collect()
    }

    /// `α̂_i = min_j α_ij`, the starting point of the monotone iteration.
    pub fn alpha_hat(&self) -> Vec<T> {
        self.equations
            .iter()
            .map(|eq| eq.iter().map(|t| t.alpha.clone()).reduce(T::min_of).expect("non-empty"))
            .collect()
    }

    /// `-10^4 (1 + max|α| + max|β|) d`.
    pub fn default_divergence_bound(&self) -> T {
        let mut m_alpha = T::zero();
        let mut m_beta = T::zero();
        for t in self.equations.iter().flatten() {
            m_alpha = T::max_of(m_alpha, t.alpha.abs());
            m_beta = T::max_of(m_beta, t.beta.abs());
        }
        -(T::int(10_000) * (T::one() + m_alpha + m_beta) * T::int(self.dim() as i64))
    }

    fn inequalities(&self) -> Vec<Inequality<T>> {
        let d = self.dim();
        let mut out = Vec::new();
        for (i, eq) in self.equations.iter().enumerate() {
            for t in eq {
                let mut a = vec![T::zero(); d];
                a[i] = T::one();
                out.push(Inequality { a: a.clone(), b: t.alpha.clone() });
                a[t.target] = a[t.target].clone() - t.gamma.clone();
                out.push(Inequality { a, b: t.alpha.clone() + t.beta.clone() });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationOptions<T> {
    pub max_iter: usize,
    /// Iterates below this value count as divergence. `None` uses the
    /// system's default bound.
    pub divergence_bound: Option<T>,
}

impl<T> Default for IterationOptions<T> {
    fn default() -> Self {
        Self { max_iter: 1000, divergence_bound: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointReport<T> {
    pub solvable: bool,
    pub solution: Option<Vec<T>>,
    pub iterations: usize,
    /// The iteration neither reached a fixed point nor crossed the divergence
    /// bound; `solvable` is meaningless unless an exact oracle settled it.
    pub undecided: bool,
    /// Set when the answer came from the exact oracle rather than iteration.
    pub exact_fallback: bool,
}

/// Monotone iteration from `α̂`. Iterates are non-increasing.
pub fn solve_min_system<T: Exponent>(
    sys: &MinMaxSystem<T>,
    opts: &IterationOptions<T>,
) -> FixedPointReport<T> {
    let bound = opts.divergence_bound.clone().unwrap_or_else(|| sys.default_divergence_bound());
    let mut x = sys.alpha_hat();
    for k in 1..=opts.max_iter {
        let next = sys.apply(&x);
        if next == x {
            return FixedPointReport {
                solvable: true,
                solution: Some(x),
                iterations: k,
                undecided: false,
                exact_fallback: false,
            };
        }
        if next.iter().any(|v| *v < bound) {
            return FixedPointReport {
                solvable: false,
                solution: None,
                iterations: k,
                undecided: false,
                exact_fallback: false,
            };
        }
        x = next;
    }
    FixedPointReport {
        solvable: false,
        solution: None,
        iterations: opts.max_iter,
        undecided: true,
        exact_fallback: false,
    }
}

/// Iteration with the exact oracle as fallback; never undecided.
pub fn solve_min_system_exact<T: Exponent>(
    sys: &MinMaxSystem<T>,
    opts: &IterationOptions<T>,
) -> FixedPointReport<T> {
    let rep = solve_min_system(sys, opts);
    if !rep.undecided {
        return rep;
    }
    let solution = maximal_solution_exact(sys);
    FixedPointReport {
        solvable: solution.is_some(),
        solution,
        iterations: rep.iterations,
        undecided: false,
        exact_fallback: true,
    }
}

/// The first `steps` iterates starting from `α̂` (inclusive).
pub fn iterates<T: Exponent>(sys: &MinMaxSystem<T>, steps: usize) -> Vec<Vec<T>> {
    let mut out = vec![sys.alpha_hat()];
    for _ in 0..steps {
        let next = sys.apply(out.last().expect("non-empty"));
        out.push(next);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
struct Inequality<T> {
    a: Vec<T>,
    b: T,
}

fn normalise<T: Exponent>(mut ineq: Inequality<T>) -> Inequality<T> {
    if let Some(p) = ineq.a.iter().find(|v| !v.is_zero()).map(|v| v.abs()) {
        for v in ineq.a.iter_mut() {
            *v = v.clone() / p.clone();
        }
        ineq.b = ineq.b / p;
    }
    ineq
}

fn dedupe<T: Exponent>(ineqs: Vec<Inequality<T>>) -> Vec<Inequality<T>> {
    let mut out: Vec<Inequality<T>> = Vec::new();
    for q in ineqs.into_iter().map(normalise) {
        if let Some(existing) = out.iter_mut().find(|e| e.a == q.a) {
            if q.b < existing.b {
                existing.b = q.b;
            }
        } else {
            out.push(q);
        }
    }
    out
}

fn eliminate<T: Exponent>(ineqs: Vec<Inequality<T>>, k: usize) -> Vec<Inequality<T>> {
    let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
    for q in ineqs {
        if q.a[k] > T::zero() {
            pos.push(q);
        } else if q.a[k] < T::zero() {
            neg.push(q);
        } else {
            rest.push(q);
        }
    }
    for p in &pos {
        for n in &neg {
            let lp = -n.a[k].clone();
            let ln = p.a[k].clone();
            let a = p
                .a
                .iter()
                .zip(&n.a)
                .map(|(x, y)| lp.clone() * x.clone() + ln.clone() * y.clone())
                .collect::<Vec<_>>();
            let b = lp.clone() * p.b.clone() + ln.clone() * n.b.clone();
            rest.push(Inequality { a, b });
        }
    }
    dedupe(rest)
}

fn feasible_after_elimination<T: Exponent>(ineqs: &[Inequality<T>]) -> bool {
    ineqs.iter().all(|q| !q.a.iter().all(|v| v.is_zero()) || q.b >= T::zero())
}

/// Exact feasibility of `x <= F[x]` by Fourier–Motzkin elimination. A
/// solution of `x = F[x]` exists exactly when this system is feasible.
pub fn check_feasibility_exact<T: Exponent>(sys: &MinMaxSystem<T>) -> bool {
    let mut ineqs = dedupe(sys.inequalities());
    for k in 0..sys.dim() {
        ineqs = eliminate(ineqs, k);
        if !feasible_after_elimination(&ineqs) {
            return false;
        }
    }
    feasible_after_elimination(&ineqs)
}

/// Largest dimension decided by elimination alone in [`is_solvable`].
pub const ELIMINATION_MAX_DIM: usize = 6;

/// Iterations tried in [`is_solvable`] before switching to elimination.
const QUICK_ITERATIONS: usize = 2;

/// Solvability only. Small systems that do not settle within a few iterates
/// go to elimination, which avoids the coefficient growth of long exact
/// iteration.
pub fn is_solvable<T: Exponent>(sys: &MinMaxSystem<T>, opts: &IterationOptions<T>) -> bool {
    if sys.dim() > ELIMINATION_MAX_DIM {
        return solve_min_system_exact(sys, opts).solvable;
    }
    let quick = IterationOptions { max_iter: QUICK_ITERATIONS.min(opts.max_iter), ..opts.clone() };
    let rep = solve_min_system(sys, &quick);
    if rep.undecided {
        check_feasibility_exact(sys)
    } else {
        rep.solvable
    }
}

/// The greatest element of `{x <= F[x]}`, which is the maximal solution.
pub fn maximal_solution_exact<T: Exponent>(sys: &MinMaxSystem<T>) -> Option<Vec<T>> {
    if !check_feasibility_exact(sys) {
        return None;
    }
    let d = sys.dim();
    let base = dedupe(sys.inequalities());
    let mut out = Vec::with_capacity(d);
    for i in 0..d {
        let mut ineqs = base.clone();
        for k in (0..d).filter(|&k| k != i) {
            ineqs = eliminate(ineqs, k);
        }
        let upper = ineqs
            .iter()
            .filter(|q| q.a[i] > T::zero())
            .map(|q| q.b.clone() / q.a[i].clone())
            .reduce(T::min_of)?;
        out.push(upper);
    }
    Some(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxTerm<T> {
    pub c: T,
    pub gamma: T,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxSystem<T> {
    equations: Vec<Vec<MaxTerm<T>>>,
}

impl<T: Exponent> MaxSystem<T> {
    /// Equations may be empty (the component is then 0). `γ >= 0` is required;
    /// `γ = 0` gives a constant candidate.
    pub fn new(equations: Vec<Vec<MaxTerm<T>>>) -> Result<Self, AlgebraError> {
        let d = equations.len();
        if d == 0 {
            return Err(AlgebraError::InvalidArgument("system has no equations".into()));
        }
        for (i, eq) in equations.iter().enumerate() {
            for t in eq {
                if t.target >= d {
                    return Err(AlgebraError::InvalidArgument(format!(
                        "equation {i} references unknown component {}",
                        t.target
                    )));
                }
                if t.gamma < T::zero() {
                    return Err(AlgebraError::InvalidArgument(format!(
                        "equation {i} has negative coefficient gamma = {}",
                        t.gamma
                    )));
                }
            }
        }
        Ok(Self { equations })
    }

    pub fn dim(&self) -> usize {
        self.equations.len()
    }

    pub fn equations(&self) -> &[Vec<MaxTerm<T>>] {
        &self.equations
    }

    pub fn apply(&self, s: &[T]) -> Vec<T> {
        self.equations
            .iter()
            .map(|eq| {
                eq.iter()
                    .map(|t| t.c.clone() + t.gamma.clone() * s[t.target].clone())
                    .fold(T::zero(), T::max_of)
            })
            .collect()
    }

    /// The min-system satisfied by `y = -σ`. Term 0 of each equation is the
    /// rigid zero candidate.
    pub fn negated(&self) -> MinMaxSystem<T> {
        let eqs = self
            .equations
            .iter()
            .enumerate()
            .map(|(i, eq)| {
                let mut terms = vec![AffineTerm::constant(T::zero(), i)];
                terms.extend(
                    eq.iter()
                        .map(|t| AffineTerm::new(T::zero(), -t.c.clone(), t.gamma.clone(), t.target)),
                );
                terms
            })
            .collect();
        MinMaxSystem::new(eqs).expect("negation of a valid max-system is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxSystemReport<T> {
    pub bounded: bool,
    pub solution: Option<Vec<T>>,
    pub iterations: usize,
    pub exact_fallback: bool,
}

/// Least solution by upward iteration from 0, with the exact oracle as
/// fallback. Iterates are non-decreasing.
pub fn solve_max_system<T: Exponent>(
    sys: &MaxSystem<T>,
    opts: &IterationOptions<T>,
) -> MaxSystemReport<T> {
    let neg = sys.negated();
    let opts = IterationOptions {
        max_iter: opts.max_iter,
        divergence_bound: opts.divergence_bound.clone().map(|b| -b.abs()),
    };
    let rep = solve_min_system_exact(&neg, &opts);
    MaxSystemReport {
        bounded: rep.solvable,
        solution: rep.solution.map(|y| y.into_iter().map(|v| -v).collect()),
        iterations: rep.iterations,
        exact_fallback: rep.exact_fallback,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DependencyGraph {
    pub dim: usize,
    /// `(j, i)`: the minimum of equation `i` is attained by the affine term
    /// targeting `j`.
    pub edges: BTreeSet<(usize, usize)>,
}

/// Edges `j -> i` at a solution. Ties between the constant and the affine
/// candidate count as attained. Terms with `γ = 0` are constants and carry no
/// edge.
pub fn build_dependency_graph<T: Exponent>(
    sys: &MinMaxSystem<T>,
    solution: &[T],
) -> Result<DependencyGraph, AlgebraError> {
    if solution.len() != sys.dim() {
        return Err(AlgebraError::InvalidArgument(format!(
            "solution has {} components, system has {}",
            solution.len(),
            sys.dim()
        )));
    }
    let image = sys.apply(solution);
    let mut edges = BTreeSet::new();
    for (i, eq) in sys.equations().iter().enumerate() {
        if image[i] != solution[i] {
            return Err(AlgebraError::NotAFixedPoint(i));
        }
        for t in eq.iter().filter(|t| t.gamma > T::zero()) {
            let aff = t.affine(solution);
            if aff == solution[i] && aff <= t.alpha {
                edges.insert((t.target, i));
            }
        }
    }
    Ok(DependencyGraph { dim: sys.dim(), edges })
}

/// Cyclic strongly connected components, each sorted; a self-loop is a
/// component of size one.
pub fn detect_loops(graph: &DependencyGraph) -> Vec<Vec<usize>> {
    let n = graph.dim;
    let mut adj = vec![Vec::new(); n];
    for &(j, i) in &graph.edges {
        adj[j].push(i);
    }
    let reach = |from: usize| {
        let mut seen = vec![false; n];
        let mut stack = adj[from].clone();
        while let Some(v) = stack.pop() {
            if !seen[v] {
                seen[v] = true;
                stack.extend(adj[v].iter().copied());
            }
        }
        seen
    };
    let reach_all: Vec<Vec<bool>> = (0..n).map(reach).collect();
    let mut assigned = vec![false; n];
    let mut loops = Vec::new();
    for v in 0..n {
        if assigned[v] || !reach_all[v][v] {
            continue;
        }
        let comp: Vec<usize> = (0..n).filter(|&w| reach_all[v][w] && reach_all[w][v]).collect();
        for &w in &comp {
            assigned[w] = true;
        }
        loops.push(comp);
    }
    loops
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub robust: bool,
    pub corners_checked: usize,
    /// Corners were sampled rather than enumerated.
    pub sampled: bool,
    /// Bit `k` set means coefficient `k` was raised at the failing corner.
    pub failing_corner: Option<u64>,
}

/// Corner cap for exhaustive enumeration.
pub const MAX_ENUMERATED_COEFFICIENTS: usize = 24;
/// Corners drawn when the cap is exceeded.
pub const SAMPLED_CORNERS: usize = 4096;

/// Solvability under every `±ε` perturbation of the coefficients.
///
/// `F` is increasing in every `α` and `β`, so those sit at `-ε`; the `γ`
/// coefficients of non-constant terms range over both corners (clamped at 0).
pub fn robustness_margin<T: Exponent>(sys: &MinMaxSystem<T>, epsilon: &T) -> RobustnessReport {
    robustness_with(sys, epsilon, &|_, _| true, 0)
}

/// As [`robustness_margin`] with an explicit seed for the sampled fallback.
pub fn robustness_margin_seeded<T: Exponent>(
    sys: &MinMaxSystem<T>,
    epsilon: &T,
    seed: u64,
) -> RobustnessReport {
    robustness_with(sys, epsilon, &|_, _| true, seed)
}

/// Robustness of a max-system; the zero candidate is not a coefficient.
pub fn max_system_robustness<T: Exponent>(sys: &MaxSystem<T>, epsilon: &T) -> RobustnessReport {
    robustness_with(&sys.negated(), epsilon, &|_, k| k != 0, 0)
}

fn robustness_with<T: Exponent>(
    sys: &MinMaxSystem<T>,
    epsilon: &T,
    perturbable: &dyn Fn(usize, usize) -> bool,
    seed: u64,
) -> RobustnessReport {
    let opts = IterationOptions::default();
    let mut lowered = sys.equations().to_vec();
    let mut gammas = Vec::new();
    for (i, eq) in lowered.iter_mut().enumerate() {
        for (k, t) in eq.iter_mut().enumerate() {
            if !perturbable(i, k) {
                continue;
            }
            t.alpha = t.alpha.clone() - epsilon.clone();
            t.beta = t.beta.clone() - epsilon.clone();
            if t.gamma > T::zero() {
                gammas.push((i, k));
            }
        }
    }
    let corner = |mask: u64| {
        let mut eqs = lowered.clone();
        for (bit, &(i, k)) in gammas.iter().enumerate() {
            let g = &mut eqs[i][k].gamma;
            *g = if mask >> bit & 1 == 1 {
                g.clone() + epsilon.clone()
            } else {
                T::max_of(g.clone() - epsilon.clone(), T::zero())
            };
        }
        let perturbed = MinMaxSystem::new(eqs).expect("perturbation keeps the system valid");
        is_solvable(&perturbed, &opts)
    };
    let n = gammas.len();
    let (masks, sampled): (Vec<u64>, bool) = if n <= MAX_ENUMERATED_COEFFICIENTS {
        ((0..1u64 << n).collect(), false)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let width = n.min(64);
        let mask_max = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
        ((0..SAMPLED_CORNERS).map(|_| rng.gen::<u64>() & mask_max).collect(), true)
    };
    let mut checked = 0;
    for m in masks {
        checked += 1;
        if !corner(m) {
            return RobustnessReport {
                robust: false,
                corners_checked: checked,
                sampled,
                failing_corner: Some(m),
            };
        }
    }
    RobustnessReport { robust: true, corners_checked: checked, sampled, failing_corner: None }
}

/// The scalar lemma: `x = a + min(0, b + c x)` with `c > 1` is solvable iff
/// `b + c a >= 0`, and then `x = a`.
pub fn scalar_lemma<T: Exponent>(a: &T, b: &T, c: &T) -> Option<T> {
    if b.clone() + c.clone() * a.clone() >= T::zero() {
        Some(a.clone())
    } else {
        None
    }
}
