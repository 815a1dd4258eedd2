use wavecrit::decay_rules::{
    classify, derive_systems, tail_from_forcing, ClassifyOptions, DataKind, DataSpec, Derivative, ForcingRegion,
    NonlinearTerm, Tail, Verdict, WaveSystem,
};
use wavecrit::exponent_algebra::{solve_min_system_exact, IterationOptions};
use wavecrit::scalar::Exponent;
use wavecrit::Rational;

fn q(p: i64, d: i64) -> Rational {
    Rational::ratio(p, d)
}

fn term(equation: usize, source: usize, derivative: Derivative, power: Rational) -> NonlinearTerm<Rational> {
    NonlinearTerm { equation, source, derivative, power, coefficient: 1.0, t_weight: q(0, 1), u_weight: q(0, 1) }
}

fn system(n: u32, fields: usize, terms: Vec<NonlinearTerm<Rational>>) -> WaveSystem<Rational> {
    WaveSystem {
        dimension: n,
        fields: (1..=fields).map(|i| format!("phi{i}")).collect(),
        terms,
        data: vec![Some(DataSpec::compact(1e-2, 1.0)); fields],
    }
}

fn verdict(sys: &WaveSystem<Rational>) -> Verdict {
    classify(sys, &ClassifyOptions::default()).unwrap().verdict
}

#[test]
fn cubic_strauss_has_unit_tail() {
    let sys = system(3, 1, vec![term(0, 0, Derivative::None, q(3, 1))]);
    let c = classify(&sys, &ClassifyOptions::default()).unwrap();
    assert_eq!(c.verdict, Verdict::ExpectedStable);
    assert_eq!(c.sigma, Some(vec![q(0, 1)]));
    assert_eq!(c.s, Some(vec![Tail::Finite(q(1, 1))]));
    assert!(c.loops.is_empty());
}

#[test]
fn strauss_glassey_system_examples() {
    let mk = |q1, q2| {
        system(3, 2, vec![term(0, 1, Derivative::None, q1), term(1, 0, Derivative::Dt, q2)])
    };
    let c = classify(&mk(q(9, 5), q(3, 1)), &ClassifyOptions::default()).unwrap();
    assert_eq!(c.verdict, Verdict::ExpectedStable);
    assert_eq!(c.sigma, Some(vec![q(1, 5), q(0, 1)]));
    assert_eq!(c.s, Some(vec![Tail::Finite(q(-12, 25)), Tail::Finite(q(2, 5))]));
    assert_eq!(verdict(&mk(q(3, 2), q(5, 2))), Verdict::ExpectedUnstable);
}

#[test]
fn glassey_sigma_examples() {
    let mk = |p| system(3, 1, vec![term(0, 0, Derivative::Dt, p)]);
    let (sigma, _) = derive_systems(&mk(q(5, 2))).unwrap();
    assert_eq!(sigma.apply(&[q(0, 1)]), vec![q(0, 1)]);
    let c = classify(&mk(q(3, 2)), &ClassifyOptions::default()).unwrap();
    assert_eq!(c.verdict, Verdict::ExpectedUnstable);
    assert!(c.sigma.is_none());
}

#[test]
fn dv_problem_in_two_dimensions_uses_the_even_cap() {
    let mk = |p| system(2, 1, vec![term(0, 0, Derivative::Dv, p)]);
    assert_eq!(verdict(&mk(q(7, 5))), Verdict::ExpectedUnstable);
    assert_eq!(verdict(&mk(q(8, 5))), Verdict::ExpectedStable);
    assert_eq!(verdict(&mk(q(3, 2))), Verdict::Borderline);
}

#[test]
fn data_tail_at_the_boundary_is_borderline() {
    let mut sys = system(3, 1, vec![term(0, 0, Derivative::None, q(3, 1))]);
    sys.data[0] = Some(DataSpec { kind: DataKind::Tail(q(1, 1)), amplitude: 1e-2, support: 1.0 });
    assert_eq!(verdict(&sys), Verdict::Borderline);
    sys.data[0] = Some(DataSpec { kind: DataKind::Tail(q(3, 1)), amplitude: 1e-2, support: 1.0 });
    assert_eq!(verdict(&sys), Verdict::ExpectedStable);
    sys.data[0] = Some(DataSpec { kind: DataKind::Tail(q(3, 4)), amplitude: 1e-2, support: 1.0 });
    assert_eq!(verdict(&sys), Verdict::ExpectedUnstable);
}

#[test]
fn critical_system_is_not_stable() {
    let sys = system(
        3,
        3,
        vec![
            term(0, 2, Derivative::None, q(3, 1)),
            term(1, 0, Derivative::Dt, q(2, 1)),
            term(2, 1, Derivative::Dt, q(2, 1)),
            term(2, 0, Derivative::None, q(3, 1)),
        ],
    );
    assert_ne!(verdict(&sys), Verdict::ExpectedStable);
}

#[test]
fn log_flags_mark_critical_decay() {
    // Glassey exactly at q = 2 in n = 3: the scri forcing decays like v^{-1}.
    let c = classify(&system(3, 1, vec![term(0, 0, Derivative::Dt, q(2, 1))]), &ClassifyOptions::default()).unwrap();
    assert!(c.log_flags[0].scri);
    assert_eq!(c.verdict, Verdict::Borderline);
}

#[test]
fn uncoupled_field_with_compact_data_has_no_tail() {
    let sys = system(3, 2, vec![term(1, 0, Derivative::None, q(3, 1))]);
    let c = classify(&sys, &ClassifyOptions::default()).unwrap();
    let s = c.s.unwrap();
    assert_eq!(s[0], Tail::Infinite);
    assert!(matches!(s[1], Tail::Finite(_)));
}

#[test]
fn s_system_reduces_to_the_scalar_lemma() {
    // Strauss in n = 3: s = (q-1) - 1 + min(0, q s - 1), solvable iff the
    // scalar lemma holds with a = q - 2, b = -1, c = q.
    for (p, d) in [(21, 10), (12, 5), (5, 2), (3, 1)] {
        let power = q(p, d);
        let sys = system(3, 1, vec![term(0, 0, Derivative::None, power.clone())]);
        let (_, ss) = derive_systems(&sys).unwrap();
        let ss = ss.unwrap();
        let rep = solve_min_system_exact(&ss.system, &IterationOptions::default());
        let a = power.clone() - q(2, 1);
        let expected = wavecrit::exponent_algebra::scalar_lemma(&a, &q(-1, 1), &power);
        assert_eq!(rep.solution.map(|v| v[0].clone()), expected, "q = {power}");
    }
}

#[test]
fn forcing_table_rows() {
    let n = 3;
    let r = tail_from_forcing(ForcingRegion::NullInfinity, &q(3, 1), n);
    assert_eq!(r.timelike, Tail::Finite(q(1, 1)));
    assert_eq!(r.null_infinity, q(0, 1));
    let r = tail_from_forcing(ForcingRegion::TimelikeInfinity, &q(3, 1), n);
    assert_eq!(r.timelike, Tail::Finite(q(0, 1)));
    let r = tail_from_forcing(ForcingRegion::Compact, &q(3, 1), n);
    assert_eq!(r.timelike, Tail::Infinite);
    let r = tail_from_forcing(ForcingRegion::Compact, &q(3, 1), 4);
    assert_eq!(r.timelike, Tail::Finite(q(3, 2)));
    let r = tail_from_forcing(ForcingRegion::NullInfinity, &q(3, 2), n);
    assert_eq!(r.null_infinity, q(-1, 2));
}

#[test]
fn invalid_systems_are_rejected() {
    let mut sys = system(3, 1, vec![term(0, 1, Derivative::None, q(3, 1))]);
    assert!(classify(&sys, &ClassifyOptions::default()).is_err());
    sys.terms[0].source = 0;
    sys.terms[0].power = q(1, 1);
    assert!(classify(&sys, &ClassifyOptions::default()).is_err());
    let mut sys = system(3, 2, vec![term(0, 0, Derivative::None, q(3, 1))]);
    sys.data[1] = None;
    assert!(classify(&sys, &ClassifyOptions::default()).is_err());
    assert!(classify(&system(1, 1, vec![term(0, 0, Derivative::None, q(3, 1))]), &ClassifyOptions::default()).is_err());
}

#[test]
fn float_exponents_agree_with_rationals_away_from_curves() {
    for (p, d) in [(2, 1), (5, 2), (3, 1), (4, 1)] {
        let rat = system(3, 1, vec![term(0, 0, Derivative::None, q(p, d))]);
        let flt = WaveSystem {
            dimension: 3,
            fields: rat.fields.clone(),
            terms: vec![NonlinearTerm {
                equation: 0,
                source: 0,
                derivative: Derivative::None,
                power: p as f64 / d as f64,
                coefficient: 1.0,
                t_weight: 0.0,
                u_weight: 0.0,
            }],
            data: vec![Some(DataSpec::compact(1e-2, 1.0))],
        };
        assert_eq!(verdict(&rat), classify(&flt, &ClassifyOptions::default()).unwrap().verdict);
    }
}
