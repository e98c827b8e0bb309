//! Parisi functional and stationarity examples.

use elastic_polymer::parisi::{
    big_f, eval_functional, eval_functional_with_cut, f_profile, rs_free_energy, stationarity_residuals,
};
use elastic_polymer::phase::{larkin_mass, solve_frsb, solve_rs, solve_rs_with_kernel};
use elastic_polymer::{Correlator, ModelParams, ParisiMeasure, ResolventKernel};

const EXP_M2: f64 = 0.135_335_283_236_612_7;

fn unit_exp() -> Correlator {
    Correlator::exponential(1.0, 1.0).unwrap()
}

fn unit_params() -> ModelParams {
    ModelParams::new(1.0, 1.0, 1.0).unwrap()
}

#[test]
fn rs_free_energy_examples() {
    assert_eq!(rs_free_energy(&unit_params(), &Correlator::zero()), 0.0);
    let v = rs_free_energy(&unit_params(), &unit_exp());
    assert!((v - 0.5 * (1.0 - EXP_M2)).abs() < 1e-15);
    assert!((v - 0.432_332).abs() < 1e-6);
    let tiny = ModelParams::new(1e-8, 1.0, 1.0).unwrap();
    assert!(rs_free_energy(&tiny, &unit_exp()).abs() < 1e-12);
}

#[test]
fn functional_at_rs_pair_is_the_closed_form() {
    let sol = solve_rs(&unit_params(), &unit_exp()).unwrap();
    let k = ResolventKernel::continuum(1.0).unwrap();
    let v = eval_functional(&k, &unit_params(), &unit_exp(), &sol.measure).unwrap();
    assert!((v - rs_free_energy(&unit_params(), &unit_exp())).abs() < 1e-10);
    assert!((sol.free_energy - v).abs() < 1e-15);
}

#[test]
fn zero_disorder_value_vanishes_at_the_radius() {
    let p = ModelParams::new(1.3, 0.7, 2.0).unwrap();
    let k = ResolventKernel::continuum(p.t).unwrap();
    let zero = Correlator::zero();
    let q = k.r1(p.mu) / p.beta;
    let at = |q: f64| eval_functional(&k, &p, &zero, &ParisiMeasure::dirac(q, 0.0).unwrap()).unwrap();
    assert!(at(q).abs() < 1e-14);
    // q ↦ P(q, δ₀) is maximized at the radius.
    for f in [0.5, 0.9, 1.1, 2.0] {
        assert!(at(f * q) < at(q));
    }
}

#[test]
fn value_is_independent_of_the_cut() {
    let k = ResolventKernel::continuum(1.0).unwrap();
    let z = ParisiMeasure::two_point(2.0, 0.3, 1.1, 0.4).unwrap();
    let p = ModelParams::new(2.0, 0.5, 1.0).unwrap();
    let a = eval_functional_with_cut(&k, &p, &unit_exp(), &z, 1.1).unwrap();
    let b = eval_functional_with_cut(&k, &p, &unit_exp(), &z, 1.7).unwrap();
    assert!((a - b).abs() <= 1e-12);
    assert!(eval_functional_with_cut(&k, &p, &unit_exp(), &z, 0.9).is_err());
}

#[test]
fn big_f_at_zero() {
    let k = ResolventKernel::continuum(1.0).unwrap();
    let z = ParisiMeasure::two_point(2.0, 0.3, 1.1, 0.4).unwrap();
    let corr = Correlator::power_law(1.0, 1.0, 0.5).unwrap();
    let f0 = big_f(&k, &unit_params(), &corr, &z, 0.0).unwrap();
    assert!((f0 + 2.0 * corr.b1(4.0)).abs() < 1e-15);
    assert!(f0 > 0.0);
    assert!(big_f(&k, &unit_params(), &corr, &z, 2.0).is_err());
}

/// `F(s) = −2B′(2(q−s)) − ∫₀^s 2/(β³δ(u)³t) du` and `f = ∫₀^s F` by
/// composite Simpson quadrature, independent of the cell formulas.
fn f_by_simpson(p: &ModelParams, corr: &Correlator, z: &ParisiMeasure, s: f64) -> (f64, f64) {
    let n = 4000;
    let h = s / n as f64;
    let kern = |u: f64| {
        let d = z.delta(u).unwrap();
        2.0 / (p.beta.powi(3) * d.powi(3) * p.t)
    };
    let mut acc = 0.0;
    let mut big = vec![-2.0 * corr.b1(2.0 * z.q())];
    for i in 0..n {
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        acc += h / 6.0 * (kern(a) + 4.0 * kern(0.5 * (a + b)) + kern(b));
        big.push(-2.0 * corr.b1(2.0 * (z.q() - b)) - acc);
    }
    let mut little = 0.0;
    for i in 0..n {
        little += 0.5 * h * (big[i] + big[i + 1]);
    }
    (big[n], little)
}

#[test]
fn f_profile_matches_quadrature() {
    let k = ResolventKernel::continuum(1.0).unwrap();
    let p = ModelParams::new(2.0, 0.2, 1.0).unwrap();
    let corr = unit_exp();
    // Only constant-CDF pieces, so δ is piecewise linear and Simpson is exact
    // within each cell up to its smooth-integrand error.
    let z = ParisiMeasure::two_point(2.0, 0.5, 1.2, 0.35).unwrap();
    for &s in &[0.25, 0.5, 0.9, 1.5] {
        let (f_lib, little_lib) = f_profile(&k, &p, &corr, &z, &[s]).unwrap()[0];
        let (f_ref, little_ref) = f_by_simpson(&p, &corr, &z, s);
        assert!((f_lib - f_ref).abs() < 1e-9, "F({s}): {f_lib} vs {f_ref}");
        // Trapezoid accumulation of f: second order.
        assert!((little_lib - little_ref).abs() < 1e-6, "f({s}): {little_lib} vs {little_ref}");
    }
}

#[test]
fn rs_pair_is_stationary() {
    let sol = solve_rs(&unit_params(), &unit_exp()).unwrap();
    assert!(sol.residuals.max_defect() <= 1e-10);
    let k = ResolventKernel::continuum(1.0).unwrap();
    let f = big_f(&k, &unit_params(), &unit_exp(), &sol.measure, sol.q_star()).unwrap();
    assert!(f.abs() <= 1e-8);
}

#[test]
fn larkin_residual_tracks_q_perturbation() {
    let p = ModelParams::new(1.7, 1.0, 1.0).unwrap();
    let sol = solve_rs(&p, &unit_exp()).unwrap();
    let k = ResolventKernel::continuum(1.0).unwrap();
    let bumped = ParisiMeasure::dirac(sol.q_c + 1e-3, sol.q_star()).unwrap();
    let r = stationarity_residuals(&k, &p, &unit_exp(), &bumped).unwrap();
    assert!((r.larkin_residual.abs() - p.beta * 1e-3).abs() < 1e-12);
}

#[test]
fn frsb_pair_is_stationary() {
    let corr = Correlator::power_law(1.0, 1.0, 0.5).unwrap();
    let mu = larkin_mass(2.0, 1.0, &corr).unwrap() / 10.0;
    let p = ModelParams::new(2.0, mu, 1.0).unwrap();
    let sol = solve_frsb(&p, &corr).unwrap();
    assert!(sol.residuals.larkin_residual.abs() <= 1e-10);
    assert!(sol.residuals.support_max_f_gap <= 1e-8);
    assert_eq!(sol.residuals.offsupport_violation, 0.0);
    let k = ResolventKernel::continuum(1.0).unwrap();
    let (q0, qs) = (sol.extras["q_0"], sol.q_star());
    let pts: Vec<f64> = (0..=200).map(|i| q0 + (qs - q0) * i as f64 / 200.0 * (1.0 - 1e-12)).collect();
    for (s, (f, _)) in pts.iter().zip(f_profile(&k, &p, &corr, &sol.measure, &pts).unwrap()) {
        assert!(f.abs() <= 1e-8, "F({s}) = {f}");
    }
}

/// The lattice functional converges, but to the continuum functional with
/// `t` replaced by `4t`: the lattice `R₁` tends to
/// `∫_ℝ dξ/(μ + 4π²tξ²) = 1/(2√(μt)) = 1/√(μ·4t)`, not to `1/√(μt)`.
#[test]
fn lattice_functional_limit_has_quadrupled_stiffness() {
    let corr = unit_exp();
    let p = unit_params();
    let l = 10_000;
    let kl = ResolventKernel::lattice(l, 1.0).unwrap();
    let lat = solve_rs_with_kernel(&kl, &p.clone().with_lattice(l).unwrap(), &corr, 200).unwrap();
    assert!(lat.residuals.max_defect() <= 1e-10);
    let k4 = ResolventKernel::continuum(4.0).unwrap();
    let cont4 = solve_rs_with_kernel(&k4, &ModelParams::new(1.0, 1.0, 4.0).unwrap(), &corr, 200).unwrap();
    assert!((lat.free_energy - cont4.free_energy).abs() <= 1e-4, "{} vs {}", lat.free_energy, cont4.free_energy);
    assert!((lat.q_c - cont4.q_c).abs() <= 1e-4);
}
