mod common;

use common::{backward_upper, grid, series_lower, stirling_ln_gamma, EULER};
use ris_emi::analysis::special::{digamma, ln_gamma, regularized_lower_gamma, regularized_upper_gamma, trigamma};
use ris_emi::analysis::gamma_cdf;

#[test]
fn ln_gamma_against_stirling() {
    for &z in &[0.1, 0.5, 1.0, 1.5, 2.955, 3.01, 7.25, 10.0, 50.0, 171.0] {
        let got = ln_gamma(z);
        let want = stirling_ln_gamma(z);
        assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "ln_gamma({z}) = {got} vs {want}");
    }
    let mut fact = 0.0;
    for n in 1..30 {
        fact += (n as f64).ln();
        assert!((ln_gamma(n as f64 + 1.0) - fact).abs() <= 1e-12 * fact.max(1.0));
    }
}

#[test]
fn polygamma_closed_forms() {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    assert!((digamma(1.0) + EULER).abs() < 1e-13);
    assert!((digamma(0.5) + EULER + 2.0 * 2f64.ln()).abs() < 1e-13);
    assert!((trigamma(1.0) - pi2 / 6.0).abs() < 1e-13);
    assert!((trigamma(0.5) - pi2 / 2.0).abs() < 1e-12);
    let (mut h, mut s2) = (0.0, 0.0);
    for n in 1..40 {
        h += 1.0 / n as f64;
        s2 += 1.0 / (n * n) as f64;
        let x = n as f64 + 1.0;
        assert!((digamma(x) - (h - EULER)).abs() < 1e-13 * x.ln().max(1.0), "digamma({x})");
        assert!((trigamma(x) - (pi2 / 6.0 - s2)).abs() < 1e-13, "trigamma({x})");
    }
}

#[test]
fn incomplete_gamma_against_independent_oracles() {
    for &a in &[0.5, 1.0, 2.955, 10.0] {
        for x in grid() {
            let p = regularized_lower_gamma(a, x).unwrap();
            let q = regularized_upper_gamma(a, x).unwrap();
            let p_ref = series_lower(a, x);
            assert!((p - p_ref).abs() <= 1e-10, "P({a}, {x}) = {p} vs {p_ref}");
            assert!((p + q - 1.0).abs() <= 1e-12);
            if x > a + 1.0 {
                let q_ref = backward_upper(a, x);
                assert!((q - q_ref).abs() <= 1e-10 * q_ref.max(1e-300), "Q({a}, {x}) = {q} vs {q_ref}");
            }
        }
    }
}

#[test]
fn gamma_cdf_against_series() {
    for &(a, b) in &[(0.5, 1.0), (1.0, 3.0), (2.955, 470.391), (10.0, 0.25)] {
        for t in grid() {
            let got = gamma_cdf(t * b, a, b).unwrap();
            assert!((got - series_lower(a, t)).abs() <= 1e-10, "a={a} b={b} x/b={t}");
        }
    }
}

#[test]
fn unit_shape_is_exponential() {
    for t in grid() {
        let want = -(-t).exp_m1();
        assert!((gamma_cdf(t * 3.0, 1.0, 3.0).unwrap() - want).abs() <= 1e-13 * want.max(1e-3));
    }
}
