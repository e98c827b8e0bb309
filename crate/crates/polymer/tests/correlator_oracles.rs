//! Correlator examples checked against independent closed forms and
//! finite-difference oracles.

use elastic_polymer::{Atom, Correlator, UbShape};

/// `e^{-2}` to full double precision.
const EXP_M2: f64 = 0.135_335_283_236_612_7;

/// Falling-factorial derivative of `g (a + x)^{-γ}`, written out independently.
fn power_law_derivative(g: f64, a: f64, gamma: f64, x: f64, order: u32) -> f64 {
    let mut coef = g;
    for k in 0..order {
        coef *= -(gamma + k as f64);
    }
    coef * (a + x).powf(-gamma - order as f64)
}

/// Five-point central difference.
fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

#[test]
fn power_law_values_at_zero() {
    let c = Correlator::power_law(1.0, 1.0, 2.0).unwrap();
    assert_eq!(c.eval_b(0.0, 0).unwrap(), 1.0);
    assert!((c.eval_b(0.0, 2).unwrap() - 6.0).abs() < 1e-14);
}

#[test]
fn exponential_first_derivative_at_two() {
    let c = Correlator::exponential(1.0, 1.0).unwrap();
    assert!((c.eval_b(2.0, 1).unwrap() + EXP_M2).abs() < 1e-16);
}

#[test]
fn eval_rejects_bad_arguments() {
    let c = Correlator::exponential(1.0, 1.0).unwrap();
    assert!(c.eval_b(-1.0, 0).is_err());
    assert!(c.eval_b(1.0, 4).is_err());
}

#[test]
fn power_law_derivatives_match_falling_factorials() {
    for &(g, a, gamma) in &[(1.0, 1.0, 0.5), (2.0, 0.5, 1.0), (0.3, 3.0, 2.5)] {
        let c = Correlator::power_law(g, a, gamma).unwrap();
        for &x in &[0.0, 0.1, 1.0, 10.0, 1e4] {
            for order in 0..=3 {
                let want = power_law_derivative(g, a, gamma, x, order);
                let got = c.eval_b(x, order).unwrap();
                assert!((got - want).abs() <= 1e-13 * want.abs(), "{c:?} x={x} order={order}");
            }
        }
    }
}

#[test]
fn analytic_derivatives_match_finite_differences() {
    let cases = [
        Correlator::exponential(1.3, 0.7).unwrap(),
        Correlator::power_law(1.0, 1.0, 0.5).unwrap(),
        Correlator::mixture(0.0, vec![Atom { lambda: 0.5, weight: 1.0 }, Atom { lambda: 2.0, weight: 0.25 }]).unwrap(),
    ];
    for c in &cases {
        for &x in &[0.3, 1.0, 4.0] {
            for order in 0..3u32 {
                let h = 1e-3 * (1.0 + x);
                let fd = central_difference(|y| c.eval_b(y, order).unwrap(), x, h);
                let exact = c.eval_b(x, order + 1).unwrap();
                assert!((fd - exact).abs() <= 1e-6 * exact.abs(), "{c:?} x={x} order={order}: {fd} vs {exact}");
            }
        }
    }
}

#[test]
fn ub_of_unit_exponential_at_zero() {
    let c = Correlator::exponential(1.0, 1.0).unwrap();
    let want = 2f64.powf(-1.0 / 3.0);
    assert!((c.ub(0.0, 1.0).unwrap() - want).abs() < 1e-12);
    assert!((want - 0.793_701).abs() < 1e-6);
}

#[test]
fn ub_is_linear_for_unit_power() {
    for &t in &[0.5, 1.0, 3.0] {
        let c = Correlator::power_law(1.0, 1.0, 1.0).unwrap();
        let slope = c.ub_prime(0.0, t).unwrap();
        for &s in &[0.0, 0.5, 2.0, 10.0, 100.0] {
            assert!((c.ub_prime(s, t).unwrap() - slope).abs() <= 1e-12 * slope.abs());
            let linear = c.ub(0.0, t).unwrap() + slope * s;
            assert!((c.ub(s, t).unwrap() - linear).abs() <= 1e-12 * linear);
        }
    }
}

#[test]
fn ub_is_concave_for_half_power() {
    let c = Correlator::power_law(1.0, 1.0, 0.5).unwrap();
    for k in 0..60 {
        let s = 1e-3 * 1.3f64.powi(k);
        let h = 1e-4 * (1.0 + s);
        let second = (c.ub(s + h, 1.0).unwrap() - 2.0 * c.ub(s, 1.0).unwrap() + c.ub(s - h, 1.0).unwrap()) / (h * h);
        let slope_drop = c.ub_prime(s + h, 1.0).unwrap() - c.ub_prime(s, 1.0).unwrap();
        assert!(slope_drop < 0.0 || second < 0.0, "U_B not concave at s = {s}");
    }
}

#[test]
fn ub_prime_matches_finite_differences() {
    for c in [Correlator::exponential(1.0, 1.0).unwrap(), Correlator::power_law(1.0, 1.0, 2.0).unwrap()] {
        for &s in &[0.1, 1.0, 5.0] {
            let fd = central_difference(|y| c.ub(y, 1.5).unwrap(), s, 1e-3);
            let exact = c.ub_prime(s, 1.5).unwrap();
            assert!((fd - exact).abs() <= 1e-7 * exact.abs());
        }
    }
}

#[test]
fn shape_labels() {
    assert_eq!(Correlator::power_law(1.0, 1.0, 2.0).unwrap().ub_shape(1.0), UbShape::StrictlyConvex);
    assert_eq!(Correlator::power_law(1.0, 1.0, 0.5).unwrap().ub_shape(1.0), UbShape::StrictlyConcave);
    assert_eq!(Correlator::power_law(1.0, 1.0, 1.0).unwrap().ub_shape(1.0), UbShape::Linear);
    assert_eq!(Correlator::exponential(1.0, 1.0).unwrap().ub_shape(1.0), UbShape::StrictlyConvex);
    let single = Correlator::mixture(0.0, vec![Atom { lambda: 1.0, weight: 1.0 }]).unwrap();
    assert_eq!(single.ub_shape(1.0), UbShape::StrictlyConvex);
}

#[test]
fn massless_criterion_labels() {
    assert!(Correlator::power_law(1.0, 1.0, 0.5).unwrap().massless_rsb_criterion());
    assert!(!Correlator::exponential(1.0, 1.0).unwrap().massless_rsb_criterion());
    assert!(!Correlator::power_law(1.0, 1.0, 1.0).unwrap().massless_rsb_criterion());
}

#[test]
fn discretized_power_law_matches_closed_form() {
    for &gamma in &[0.5, 1.0, 2.0] {
        let c = Correlator::power_law(1.0, 1.0, gamma).unwrap();
        let m = c.to_mixture().unwrap();
        for k in 0..=100 {
            let x = 0.1 * k as f64;
            let (a, b) = (c.b(x), m.b(x));
            assert!((a - b).abs() <= 1e-4 * a, "gamma={gamma} x={x}: {a} vs {b}");
        }
    }
}

#[test]
fn exponential_is_a_single_atom_mixture() {
    let c = Correlator::exponential(2.0, 3.0).unwrap();
    let m = c.to_mixture().unwrap();
    for &x in &[0.0, 0.5, 2.0] {
        for order in 0..=3 {
            let (a, b) = (c.eval_b(x, order).unwrap(), m.eval_b(x, order).unwrap());
            assert!((a - b).abs() <= 1e-14 * a.abs());
        }
    }
}

#[test]
fn serde_tagged_record_round_trip() {
    let c = Correlator::power_law(1.0, 1.0, 0.5).unwrap();
    let json = serde_json::to_string(&c).unwrap();
    assert!(json.contains("\"kind\":\"power_law\""));
    let back: Correlator = serde_json::from_str(&json).unwrap();
    assert_eq!(back, c);
}
