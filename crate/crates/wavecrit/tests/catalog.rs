use std::cmp::Ordering;

use wavecrit::catalog::{
    dv_exponent, glassey_exponent, initial_tail_condition, kitamura_condition, side_of, strauss_exponent,
    strauss_glassey_scalar, strauss_glassey_system, strauss_null_curve, two_strauss_on_curve, Side,
};
use wavecrit::kernels1d::{john_bound, lower_bound_tail};
use wavecrit::scalar::Exponent;
use wavecrit::Rational;

fn q(p: i64, d: i64) -> Rational {
    Rational::ratio(p, d)
}

#[test]
fn strauss_values() {
    let s3 = strauss_exponent::<Rational>(3).unwrap();
    assert!((s3.to_f64() - (1.0 + 2f64.sqrt())).abs() < 1e-14);
    let s2 = strauss_exponent::<Rational>(2).unwrap();
    assert!((s2.to_f64() - (3.0 + 17f64.sqrt()) / 2.0).abs() < 1e-14);
    let vals: Vec<f64> = (2..12).map(|n| strauss_exponent::<Rational>(n).unwrap().to_f64()).collect();
    assert!(vals.windows(2).all(|w| w[1] < w[0]));
    assert!(strauss_exponent::<Rational>(1).is_none());
}

#[test]
fn simplified_surds_print_in_lowest_terms() {
    let show = |s: Option<wavecrit::catalog::QuadSurd<Rational>>| s.unwrap().simplified().to_string();
    assert_eq!(show(strauss_exponent(3)), "1 + sqrt(2)");
    assert_eq!(show(strauss_exponent(2)), "3/2 + 1/2*sqrt(17)");
    assert_eq!(show(dv_exponent(3)), "1/2 + 1/2*sqrt(3)");
    assert_eq!(show(glassey_exponent(3)), "2");
    for n in 2..16 {
        for s in [strauss_exponent::<Rational>(n), dv_exponent(n)].into_iter().flatten() {
            let t = s.simplified();
            assert_eq!(s.cmp_rational(&Rational::ratio(0, 1)), t.cmp_rational(&Rational::ratio(0, 1)));
            assert!((s.to_f64() - t.to_f64()).abs() < 1e-12, "n = {n}: {s} vs {t}");
            for k in 0..200 {
                let x = Rational::ratio(k, 40);
                assert_eq!(s.cmp_rational(&x), t.cmp_rational(&x), "n = {n}, x = {x}");
            }
        }
    }
}

#[test]
fn strauss_exponent_is_the_quadratic_root() {
    for n in 2..20i64 {
        let p = strauss_exponent::<Rational>(n as u32).unwrap().to_f64();
        let nf = n as f64;
        assert!(((nf - 1.0) * p * p - (nf + 1.0) * p - 2.0).abs() < 1e-12, "n = {n}");
    }
}

#[test]
fn exact_comparison_against_rationals() {
    let s3 = strauss_exponent::<Rational>(3).unwrap();
    assert_eq!(s3.cmp_rational(&q(241, 100)), Ordering::Greater);
    assert_eq!(s3.cmp_rational(&q(242, 100)), Ordering::Less);
    assert_eq!(side_of(&q(5, 2), &s3), Side::StableSide);
    assert_eq!(side_of(&q(2, 1), &s3), Side::UnstableSide);
    let g = glassey_exponent::<Rational>(3).unwrap();
    assert_eq!(side_of(&q(2, 1), &g), Side::Critical);
}

#[test]
fn glassey_values() {
    assert_eq!(glassey_exponent::<Rational>(3).unwrap().cmp_rational(&q(2, 1)), Ordering::Equal);
    assert_eq!(glassey_exponent::<Rational>(2).unwrap().cmp_rational(&q(3, 1)), Ordering::Equal);
    assert_eq!(glassey_exponent::<Rational>(11).unwrap().cmp_rational(&q(6, 5)), Ordering::Equal);
}

#[test]
fn dv_values() {
    let d3 = dv_exponent::<Rational>(3).unwrap();
    assert!((d3.to_f64() - (1.0 + 3f64.sqrt()) / 2.0).abs() < 1e-14);
    assert_eq!(dv_exponent::<Rational>(2).unwrap().cmp_rational(&q(3, 2)), Ordering::Equal);
    let p = d3.to_f64();
    assert!((p * (p - 1.0) * 2.0 - 1.0).abs() < 1e-12);
}

#[test]
fn two_strauss_sides() {
    assert_eq!(two_strauss_on_curve(&q(3, 1), &q(3, 1), 3), Some(Side::StableSide));
    assert_eq!(two_strauss_on_curve(&q(2, 1), &q(2, 1), 3), Some(Side::UnstableSide));
    // Symmetric diagonal meets the curve at the Strauss exponent.
    assert_eq!(two_strauss_on_curve(&q(5, 2), &q(5, 2), 3), Some(Side::StableSide));
    assert_eq!(two_strauss_on_curve(&q(12, 5), &q(12, 5), 3), Some(Side::UnstableSide));
}

#[test]
fn strauss_glassey_sides() {
    assert_eq!(strauss_glassey_system(&q(9, 5), &q(3, 1), 3), Some(Side::StableSide));
    assert_eq!(strauss_glassey_system(&q(3, 2), &q(5, 2), 3), Some(Side::UnstableSide));
    assert_eq!(strauss_glassey_scalar(&q(3, 1), &q(3, 1), 3), Some(Side::StableSide));
    assert_eq!(strauss_glassey_scalar(&q(2, 1), &q(3, 1), 3), Some(Side::Critical));
    assert_eq!(strauss_glassey_scalar(&q(19, 10), &q(3, 1), 3), Some(Side::UnstableSide));
}

#[test]
fn null_curve_is_critical_at_three_three() {
    assert_eq!(strauss_null_curve(&q(3, 1), &q(3, 1), 3), Some(Side::Critical));
    assert_eq!(strauss_null_curve(&q(4, 1), &q(4, 1), 3), Some(Side::StableSide));
    assert_eq!(strauss_null_curve(&q(2, 1), &q(2, 1), 3), Some(Side::UnstableSide));
}

#[test]
fn kitamura_and_data_tails() {
    assert_eq!(kitamura_condition(&q(3, 1), &q(0, 1), &q(0, 1), 3), Some(Side::StableSide));
    assert_eq!(kitamura_condition(&q(2, 1), &q(0, 1), &q(0, 1), 3), Some(Side::Critical));
    assert_eq!(kitamura_condition(&q(3, 1), &q(1, 1), &q(0, 1), 3), Some(Side::Critical));
    assert_eq!(initial_tail_condition(&q(3, 1), &q(2, 1), 3), Some(Side::StableSide));
    assert_eq!(initial_tail_condition(&q(3, 1), &q(1, 1), 3), Some(Side::Critical));
    assert_eq!(initial_tail_condition(&q(3, 1), &q(3, 4), 3), Some(Side::UnstableSide));
}

#[test]
fn lower_bound_tails() {
    let r = lower_bound_tail(1.0, 3.0, 2.0, 1.0).unwrap();
    assert_eq!((r.t_rate, r.u_rate, r.logarithmic), (1.0, 2.0, false));
    assert_eq!(lower_bound_tail(1.0, 3.0, 0.5, 1.0).unwrap().u_rate, 1.5);
    assert!(lower_bound_tail(1.0, 1.0, 2.0, 1.0).unwrap().logarithmic);
    assert!(lower_bound_tail(-1.0, 3.0, 2.0, 1.0).is_err());
    assert!(lower_bound_tail(1.0, 3.0, 2.0, 0.0).is_err());
}

#[test]
fn john_bounds() {
    let b = john_bound(&q(3, 1), &q(2, 1), 3).unwrap();
    assert_eq!((b.alpha_sup, b.beta, b.logarithmic), (q(1, 1), q(1, 1), false));
    assert_eq!(john_bound(&q(3, 1), &q(1, 2), 3).unwrap().beta, q(1, 2));
    assert!(john_bound(&q(3, 1), &q(1, 1), 3).unwrap().logarithmic);
    assert!(john_bound(&q(3, 1), &q(1, 1), 1).is_err());
}
