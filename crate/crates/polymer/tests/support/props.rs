//! Strategies and property bodies shared by the property suite and the
//! acceptance report.

#![allow(dead_code)]

use elastic_polymer::displacement::{green, green_prime, h_rs};
use elastic_polymer::parisi::eval_functional;
use elastic_polymer::phase::is_rs;
use elastic_polymer::simulator::{gradient, hamiltonian, sample_environment};
use elastic_polymer::{Correlator, ModelParams, ParisiMeasure, ResolventKernel};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub type Check = Result<(), TestCaseError>;

pub const CASES: u32 = 48;

pub fn config() -> ProptestConfig {
    ProptestConfig { cases: CASES, ..ProptestConfig::default() }
}

/// Raw atoms: relative locations in `[0, 0.99)` and unnormalized masses.
pub fn raw_atoms() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..0.99, 0.05f64..1.0), 1..5)
}

fn scale_atoms(q: f64, raw: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let total: f64 = raw.iter().map(|r| r.1).sum();
    raw.iter().map(|&(loc, w)| (loc * q, w / total)).collect()
}

/// A discrete measure on `[0, q)` with up to four atoms.
pub fn measure() -> impl Strategy<Value = ParisiMeasure> {
    (0.5f64..3.0, raw_atoms()).prop_map(|(q, raw)| ParisiMeasure::discrete(q, &scale_atoms(q, &raw)).unwrap())
}

pub fn correlator() -> impl Strategy<Value = Correlator> {
    prop_oneof![
        (0.1f64..3.0, 0.1f64..3.0).prop_map(|(g, a)| Correlator::exponential(g, a).unwrap()),
        (0.1f64..3.0, 0.2f64..3.0, 0.1f64..3.0).prop_map(|(g, a, c)| Correlator::power_law(g, a, c).unwrap()),
    ]
}

pub fn kernel() -> impl Strategy<Value = ResolventKernel> {
    prop_oneof![
        (0.2f64..3.0).prop_map(|t| ResolventKernel::continuum(t).unwrap()),
        (1usize..200, 0.2f64..3.0).prop_map(|(l, t)| ResolventKernel::lattice(l, t).unwrap()),
    ]
}

pub fn measure_cdf_and_gap_are_monotone(z: &ParisiMeasure) -> Check {
    let q = z.q();
    prop_assert_eq!(z.cdf(q).unwrap(), 1.0);
    prop_assert_eq!(z.delta(q).unwrap(), 0.0);
    let mut prev = (0.0, f64::INFINITY);
    for k in 0..=50 {
        let s = (q * k as f64 / 50.0).min(q);
        let (c, d) = (z.cdf(s).unwrap(), z.delta(s).unwrap());
        prop_assert!(c >= prev.0 && (0.0..=1.0).contains(&c));
        prop_assert!(d <= prev.1 && d >= 0.0);
        prop_assert!(d <= q - s + 1e-15);
        prev = (c, d);
    }
    Ok(())
}

/// `δ′ = −ζ([0, s]) ∈ [−1, 0]` is nonincreasing: `δ` is 1-Lipschitz and concave.
pub fn gap_is_lipschitz_and_concave(z: &ParisiMeasure, a: f64, b: f64) -> Check {
    let q = z.q();
    let (s0, s1) = ((a.min(b) * q).min(q), (a.max(b) * q).min(q));
    let (d0, d1) = (z.delta(s0).unwrap(), z.delta(s1).unwrap());
    let tol = 1e-13 * q;
    prop_assert!((d0 - d1).abs() <= (s1 - s0) + tol, "|δ({}) − δ({})| = {}", s0, s1, (d0 - d1).abs());
    let mid = 0.5 * (s0 + s1);
    prop_assert!(z.delta(mid).unwrap() >= 0.5 * (d0 + d1) - tol);
    Ok(())
}

pub fn translation_commutes_with_the_gap(z: &ParisiMeasure, r: f64) -> Check {
    prop_assume!(z.atoms()[0].0 + r >= 0.0);
    let zr = z.translate(r).unwrap();
    prop_assert!((zr.q() - z.q() - r).abs() < 1e-14);
    for k in 0..=20 {
        let s = (z.q() * k as f64 / 20.0).min(z.q());
        if s + r >= 0.0 && s + r <= zr.q() {
            prop_assert!((zr.delta(s + r).unwrap() - z.delta(s).unwrap()).abs() < 1e-12);
        }
    }
    Ok(())
}

pub fn resolvents_are_monotone_and_convex(k: &ResolventKernel, mu: f64) -> Check {
    let h = 1e-4 * mu;
    prop_assert!(k.r1(mu) > k.r1(mu + h) && k.r2(mu) > 0.0);
    let fd = (k.r1(mu + h) - k.r1(mu - h)) / (2.0 * h);
    prop_assert!((fd + k.r2(mu)).abs() <= 1e-6 * k.r2(mu));
    prop_assert!(k.r2(mu) > k.r2(mu + h));
    // d/dx of the log-determinant difference is R₁.
    let fd = (k.logdet_diff(mu + h, 1.0) - k.logdet_diff(mu - h, 1.0)) / (2.0 * h);
    prop_assert!((fd - k.r1(mu)).abs() <= 1e-6 * k.r1(mu));
    prop_assert!(
        (k.logdet_diff(mu, 2.0) + k.logdet_diff(2.0, mu)).abs() <= 1e-12 * k.logdet_diff(mu, 2.0).abs().max(1.0)
    );
    Ok(())
}

pub fn kernel_inverses_round_trip(k: &ResolventKernel, mu: f64) -> Check {
    let x = k.r1(mu);
    prop_assert!((k.k(x).unwrap() / mu - 1.0).abs() <= 1e-9);
    prop_assert!((k.k_prime(x).unwrap() * k.r2(mu) + 1.0).abs() <= 1e-9);
    prop_assert!((k.u_inv(1.0 / k.r2(mu)).unwrap() / x - 1.0).abs() <= 1e-9);
    Ok(())
}

pub fn correlator_derivatives_alternate_in_sign(c: &Correlator, x: f64) -> Check {
    for order in 0..=3u32 {
        let v = c.eval_b(x, order).unwrap();
        prop_assert!(v != 0.0 && (v > 0.0) == (order % 2 == 0), "order {} value {}", order, v);
    }
    let h = 1e-5 * (1.0 + x);
    let xc = x + 2.0 * h;
    let fd = (c.b(xc + h) - c.b(xc - h)) / (2.0 * h);
    prop_assert!((fd - c.b1(xc)).abs() <= 1e-6 * c.b1(xc).abs());
    Ok(())
}

pub fn hamiltonian_gradient_matches_finite_differences(seed: u64, n: usize, l: usize) -> Check {
    let p = ModelParams::new(1.0, 0.9, 1.1).unwrap();
    let env = sample_environment(&Correlator::exponential(1.0, 1.0).unwrap(), n, l, 4, seed).unwrap();
    let u: Vec<f64> = (0..n * l).map(|k| ((k as f64 + seed as f64) * 0.77).sin()).collect();
    let g = gradient(&u, &env, &p).unwrap();
    let h = 1e-5;
    for k in 0..u.len() {
        let (mut up, mut dn) = (u.clone(), u.clone());
        up[k] += h;
        dn[k] -= h;
        let fd = (hamiltonian(&up, &env, &p).unwrap() - hamiltonian(&dn, &env, &p).unwrap()) / (2.0 * h);
        prop_assert!((fd - g[k]).abs() <= 1e-6 * g[k].abs().max(1.0));
    }
    Ok(())
}

pub fn green_is_negative_increasing_and_concave(x: f64, t: f64, mu: f64) -> Check {
    prop_assert!(green(x, t, mu) < 0.0);
    prop_assert!(green_prime(x, t, mu) > 0.0);
    prop_assert_eq!(green(-x, t, mu), green(x, t, mu));
    let h = 1e-4 * mu;
    prop_assert!(green_prime(x, t, mu + h) < green_prime(x, t, mu - h));
    Ok(())
}

pub fn rs_displacement_is_nonnegative_and_even(beta: f64, mu: f64, x: f64) -> Check {
    let p = ModelParams::new(beta, mu, 1.0).unwrap();
    let corr = Correlator::exponential(1.0, 1.0).unwrap();
    prop_assume!(is_rs(&p, &corr));
    let h = h_rs(&p, &corr, x).unwrap();
    prop_assert!(h >= 0.0);
    prop_assert_eq!(h, h_rs(&p, &corr, -x).unwrap());
    Ok(())
}

/// The functional is convex along segments of measures with a common `q`.
pub fn functional_is_midpoint_convex_in_the_measure(
    a: &ParisiMeasure,
    raw: &[(f64, f64)],
    beta: f64,
    mu: f64,
) -> Check {
    let q = a.q();
    let b_atoms = scale_atoms(q, raw);
    let b = ParisiMeasure::discrete(q, &b_atoms).unwrap();
    let mut mid_atoms: Vec<(f64, f64)> = a.atoms().iter().map(|&(s, m)| (s, 0.5 * m)).collect();
    mid_atoms.extend(b_atoms.iter().map(|&(s, m)| (s, 0.5 * m)));
    let mid = ParisiMeasure::discrete(q, &mid_atoms).unwrap();
    let k = ResolventKernel::continuum(1.0).unwrap();
    let p = ModelParams::new(beta, mu, 1.0).unwrap();
    let corr = Correlator::exponential(1.0, 1.0).unwrap();
    let f = |z: &ParisiMeasure| eval_functional(&k, &p, &corr, z).unwrap();
    let (fa, fb, fm) = (f(&a), f(&b), f(&mid));
    prop_assert!(fm <= 0.5 * (fa + fb) + 1e-9 * (fa.abs() + fb.abs()).max(1.0), "{} > ({} + {})/2", fm, fa, fb);
    Ok(())
}
