use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavecrit::exponent_algebra::{
    build_dependency_graph, check_feasibility_exact, detect_loops, is_solvable, iterates, maximal_solution_exact,
    robustness_margin, scalar_lemma, solve_max_system, solve_min_system, solve_min_system_exact, AffineTerm,
    IterationOptions, MaxSystem, MaxTerm, MinMaxSystem,
};
use wavecrit::scalar::Exponent;
use wavecrit::Rational;

fn q(p: i64, d: i64) -> Rational {
    Rational::ratio(p, d)
}

fn random_system(rng: &mut ChaCha8Rng, max_dim: usize) -> MinMaxSystem<Rational> {
    random_system_with(rng, max_dim, &[q(0, 1), q(1, 2), q(1, 1), q(3, 2), q(2, 1), q(3, 1)])
}

fn random_system_with(rng: &mut ChaCha8Rng, max_dim: usize, gammas: &[Rational]) -> MinMaxSystem<Rational> {
    let d = rng.gen_range(1..=max_dim);
    let eqs = (0..d)
        .map(|_| {
            (0..rng.gen_range(1..=3))
                .map(|_| {
                    AffineTerm::new(
                        q(rng.gen_range(-6..=6), 2),
                        q(rng.gen_range(-6..=6), 2),
                        gammas[rng.gen_range(0..gammas.len())].clone(),
                        rng.gen_range(0..d),
                    )
                })
                .collect()
        })
        .collect();
    MinMaxSystem::new(eqs).unwrap()
}

fn leq(a: &[Rational], b: &[Rational]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

#[test]
fn iteration_agrees_with_exact_feasibility() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut decided = 0;
    let mut disagreements = 0;
    for _ in 0..1000 {
        let sys = random_system(&mut rng, 4);
        let rep = solve_min_system(&sys, &IterationOptions::default());
        if rep.undecided {
            continue;
        }
        decided += 1;
        let exact = maximal_solution_exact(&sys);
        if rep.solvable != check_feasibility_exact(&sys) || rep.solution != exact {
            disagreements += 1;
        }
    }
    assert_eq!(disagreements, 0);
    // Contractions with γ < 1 converge without ever reaching the fixed point
    // exactly; those stay undecided.
    assert!(decided > 850, "only {decided} decided");
}

#[test]
fn quick_solvability_matches_both_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let opts = IterationOptions::default();
    for _ in 0..500 {
        let sys = random_system(&mut rng, 4);
        let quick = is_solvable(&sys, &opts);
        assert_eq!(quick, check_feasibility_exact(&sys));
        assert_eq!(quick, solve_min_system_exact(&sys, &opts).solvable);
    }
}

#[test]
fn exact_fallback_settles_slow_iterations() {
    // x = min(0, -1/1000 + x): the iteration drifts by 1/1000 per step.
    let sys = MinMaxSystem::new(vec![vec![AffineTerm::new(q(0, 1), q(-1, 1000), q(1, 1), 0)]]).unwrap();
    let opts = IterationOptions { max_iter: 50, divergence_bound: None };
    assert!(solve_min_system(&sys, &opts).undecided);
    let rep = solve_min_system_exact(&sys, &opts);
    assert!(rep.exact_fallback && !rep.solvable && !rep.undecided);
}

#[test]
fn maximal_solution_dominates_grid_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let grid: Vec<Rational> = (-24..=24).map(|k| q(k, 4)).collect();
    let mut witnessed = 0;
    for _ in 0..100 {
        let sys = random_system(&mut rng, 2);
        let max = maximal_solution_exact(&sys);
        let d = sys.dim();
        let points: Vec<Vec<Rational>> = if d == 1 {
            grid.iter().map(|x| vec![x.clone()]).collect()
        } else {
            grid.iter().flat_map(|x| grid.iter().map(move |y| vec![x.clone(), y.clone()])).collect()
        };
        for x in points {
            if leq(&x, &sys.apply(&x)) {
                witnessed += 1;
                let m = max.as_ref().expect("a sub-solution implies solvability");
                assert!(leq(&x, m), "{x:?} not below {m:?}");
            }
        }
    }
    assert!(witnessed > 0);
}

#[test]
fn robust_solutions_have_no_loops() {
    // The no-loop property holds when every non-constant γ exceeds 1.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let eps = q(1, 1000);
    let gammas = [q(0, 1), q(3, 2), q(2, 1), q(5, 2), q(3, 1)];
    let mut robust = 0;
    for _ in 0..1000 {
        let sys = random_system_with(&mut rng, 4, &gammas);
        let rep = solve_min_system_exact(&sys, &IterationOptions::default());
        let Some(x) = rep.solution else { continue };
        if robustness_margin(&sys, &eps).robust {
            robust += 1;
            let g = build_dependency_graph(&sys, &x).unwrap();
            assert!(detect_loops(&g).is_empty(), "{sys:?}");
        }
    }
    assert!(robust > 50, "only {robust} robust instances");
}

#[test]
fn loop_at_a_tie_is_detected_and_not_robust() {
    // x = min(0, 0 + 2x): x = 0 attains the affine branch with a self-loop.
    let sys = MinMaxSystem::new(vec![vec![AffineTerm::new(q(0, 1), q(0, 1), q(2, 1), 0)]]).unwrap();
    let g = build_dependency_graph(&sys, &[q(0, 1)]).unwrap();
    assert_eq!(detect_loops(&g), vec![vec![0]]);
    assert!(!robustness_margin(&sys, &q(1, 100)).robust);
    assert!(build_dependency_graph(&sys, &[q(1, 1)]).is_err());
}

#[test]
fn scalar_lemma_matches_solver() {
    for (a, b, c) in [(1, -1, 2), (1, -3, 2), (-1, 2, 3), (-1, 4, 3), (0, 0, 2)] {
        let (a, b, c) = (q(a, 1), q(b, 1), q(c, 1));
        let sys = MinMaxSystem::new(vec![vec![AffineTerm::new(a.clone(), b.clone(), c.clone(), 0)]]).unwrap();
        let rep = solve_min_system_exact(&sys, &IterationOptions::default());
        assert_eq!(scalar_lemma(&a, &b, &c), rep.solution.map(|v| v[0].clone()));
    }
}

#[test]
fn max_system_examples() {
    // σ = max(0, 1/2 - 1 + 5/2 σ): bounded with σ = 0.
    let s = MaxSystem::new(vec![vec![MaxTerm { c: q(-1, 2), gamma: q(5, 2), target: 0 }]]).unwrap();
    let rep = solve_max_system(&s, &IterationOptions::default());
    assert!(rep.bounded);
    assert_eq!(rep.solution, Some(vec![q(0, 1)]));
    // σ = max(0, 1/2 + 3/2 σ) diverges.
    let s = MaxSystem::new(vec![vec![MaxTerm { c: q(1, 2), gamma: q(3, 2), target: 0 }]]).unwrap();
    assert!(!solve_max_system(&s, &IterationOptions::default()).bounded);
    // A chain with a constant source: σ_0 = 1/2, σ_1 = max(0, -1 + 2 σ_0) = 0.
    let s = MaxSystem::new(vec![
        vec![MaxTerm { c: q(1, 2), gamma: q(0, 1), target: 0 }],
        vec![MaxTerm { c: q(-1, 1), gamma: q(2, 1), target: 0 }],
    ])
    .unwrap();
    assert_eq!(solve_max_system(&s, &IterationOptions::default()).solution, Some(vec![q(1, 2), q(0, 1)]));
    assert!(MaxSystem::new(vec![vec![MaxTerm { c: q(0, 1), gamma: q(-1, 1), target: 0 }]]).is_err());
}

#[test]
fn invalid_systems_are_rejected() {
    assert!(MinMaxSystem::<Rational>::new(vec![]).is_err());
    assert!(MinMaxSystem::<Rational>::new(vec![vec![]]).is_err());
    assert!(MinMaxSystem::new(vec![vec![AffineTerm::new(q(0, 1), q(0, 1), q(1, 1), 3)]]).is_err());
    assert!(MinMaxSystem::new(vec![vec![AffineTerm::new(q(0, 1), q(0, 1), q(-1, 1), 0)]]).is_err());
    assert!(MinMaxSystem::new(vec![vec![AffineTerm::new(f64::NAN, 0.0, 1.0, 0)]]).is_err());
}

#[test]
fn float_instance_agrees_with_rational_instance() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let sys = random_system(&mut rng, 3);
        let fsys = MinMaxSystem::new(
            sys.equations()
                .iter()
                .map(|eq| {
                    eq.iter()
                        .map(|t| {
                            AffineTerm::new(t.alpha.to_f64_lossy(), t.beta.to_f64_lossy(), t.gamma.to_f64_lossy(), t.target)
                        })
                        .collect()
                })
                .collect(),
        )
        .unwrap();
        let a = solve_min_system(&sys, &IterationOptions::default());
        let b = solve_min_system(&fsys, &IterationOptions::default());
        if !a.undecided && !b.undecided {
            assert_eq!(a.solvable, b.solvable);
        }
    }
}

fn arb_system() -> impl Strategy<Value = MinMaxSystem<Rational>> {
    (1usize..=3).prop_flat_map(|d| {
        let term = (-6i64..=6, -6i64..=6, 0i64..=6, 0..d)
            .prop_map(|(a, b, g, j)| AffineTerm::new(q(a, 2), q(b, 2), q(g, 2), j));
        prop::collection::vec(prop::collection::vec(term, 1..=3), d)
            .prop_map(|eqs| MinMaxSystem::new(eqs).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn operator_is_monotone(sys in arb_system(), shift in 0i64..8) {
        let x: Vec<Rational> = (0..sys.dim()).map(|i| q(i as i64 - 1, 2)).collect();
        let y: Vec<Rational> = x.iter().map(|v| v.clone() + q(shift, 3)).collect();
        prop_assert!(leq(&sys.apply(&x), &sys.apply(&y)));
    }

    #[test]
    fn iterates_are_non_increasing(sys in arb_system()) {
        let its = iterates(&sys, 20);
        for w in its.windows(2) {
            prop_assert!(leq(&w[1], &w[0]));
        }
    }

    #[test]
    fn maximal_solution_is_a_fixed_point(sys in arb_system()) {
        if let Some(x) = maximal_solution_exact(&sys) {
            prop_assert_eq!(sys.apply(&x), x.clone());
            prop_assert!(leq(&x, &sys.alpha_hat()));
        }
    }
}
