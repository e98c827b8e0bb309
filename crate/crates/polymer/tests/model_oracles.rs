//! Parisi-measure examples: CDF, gap function and translation.

use elastic_polymer::model::{CdfFormula, Segment};
use elastic_polymer::{ModelParams, ParisiMeasure, Phase};

fn one_step() -> ParisiMeasure {
    ParisiMeasure::two_point(1.0, 0.2, 0.6, 0.3).unwrap()
}

/// `δ(s) = ∫_s^q ζ([0,u]) du` by a fine midpoint rule, independent of the
/// exact piecewise integration.
fn delta_by_midpoints(z: &ParisiMeasure, s: f64) -> f64 {
    let n = 200_000;
    let h = (z.q() - s) / n as f64;
    (0..n).map(|i| z.cdf(s + (i as f64 + 0.5) * h).unwrap()).sum::<f64>() * h
}

#[test]
fn dirac_cdf_is_right_continuous() {
    let z = ParisiMeasure::dirac(1.0, 0.6).unwrap();
    assert_eq!(z.cdf(0.5).unwrap(), 0.0);
    assert_eq!(z.cdf(0.6).unwrap(), 1.0);
    assert_eq!(z.cdf(1.0).unwrap(), 1.0);
    assert!(z.cdf(1.5).is_err());
    assert!(z.cdf(-0.1).is_err());
}

#[test]
fn one_step_cdf() {
    let z = one_step();
    assert_eq!(z.cdf(0.1).unwrap(), 0.0);
    assert_eq!(z.cdf(0.4).unwrap(), 0.3);
    assert_eq!(z.cdf(0.7).unwrap(), 1.0);
    assert_eq!(z.atoms(), vec![(0.2, 0.3), (0.6, 0.7)]);
}

#[test]
fn dirac_gap_values() {
    let z = ParisiMeasure::dirac(1.0, 0.6).unwrap();
    assert!((z.delta(0.0).unwrap() - 0.4).abs() < 1e-15);
    assert!((z.delta(0.8).unwrap() - 0.2).abs() < 1e-15);
    assert_eq!(z.delta(1.0).unwrap(), 0.0);
}

#[test]
fn one_step_gap_at_zero() {
    let z = one_step();
    assert!((z.delta(0.0).unwrap() - 0.52).abs() < 1e-15);
}

#[test]
fn gap_matches_midpoint_rule() {
    let formula = CdfFormula::FrsbPowerLaw { beta: 2.0, t: 1.0, g: 1.0, a: 1.0, gamma: 0.5, q_c: 3.0 };
    let cases = [
        one_step(),
        ParisiMeasure::discrete(2.0, &[(0.1, 0.2), (0.5, 0.5), (1.5, 0.3)]).unwrap(),
        ParisiMeasure::with_formula(3.0, 0.5, 2.5, formula).unwrap(),
    ];
    for z in &cases {
        for k in 0..10 {
            let s = z.q() * k as f64 / 10.0;
            let (exact, mid) = (z.delta(s).unwrap(), delta_by_midpoints(z, s));
            // The midpoint rule is only first-order accurate across the jumps.
            assert!((exact - mid).abs() < 1e-5, "s = {s}: {exact} vs {mid}");
        }
    }
}

#[test]
fn translation_examples() {
    let z = ParisiMeasure::dirac(1.0, 0.6).unwrap();
    let up = z.translate(0.1).unwrap();
    assert!((up.q() - 1.1).abs() < 1e-15 && (up.q_star() - 0.7).abs() < 1e-15);
    let down = z.translate(-0.5).unwrap();
    assert!((down.q() - 0.5).abs() < 1e-15 && (down.q_star() - 0.1).abs() < 1e-15);
    let moved = one_step().translate(0.2).unwrap();
    let atoms = moved.atoms();
    assert!((moved.q() - 1.2).abs() < 1e-15);
    assert!((atoms[0].0 - 0.4).abs() < 1e-15 && (atoms[1].0 - 0.8).abs() < 1e-15);
    assert!((atoms[0].1 - 0.3).abs() < 1e-15 && (atoms[1].1 - 0.7).abs() < 1e-15);
    assert!(z.translate(-0.6).is_err());
}

#[test]
fn translation_commutes_with_gap() {
    let z = one_step();
    for &r in &[-0.15, 0.05, 0.3] {
        let zr = z.translate(r).unwrap();
        for k in 0..=20 {
            let s = z.q() * k as f64 / 20.0;
            if s + r < 0.0 {
                continue;
            }
            assert!((zr.delta(s + r).unwrap() - z.delta(s).unwrap()).abs() < 1e-14);
        }
    }
}

#[test]
fn invalid_measures_are_rejected() {
    assert!(ParisiMeasure::dirac(1.0, 1.0).is_err());
    assert!(ParisiMeasure::two_point(1.0, 0.6, 0.2, 0.3).is_err());
    assert!(ParisiMeasure::two_point(1.0, 0.2, 0.6, 1.3).is_err());
    // A CDF that does not reach one before q.
    let tiles = vec![Segment::ConstantCdf { start: 0.0, end: 1.0, value: 0.5 }];
    assert!(ParisiMeasure::from_tiles(1.0, tiles).is_err());
    // A decreasing sampled CDF.
    let tiles = vec![
        Segment::SampledCdf { start: 0.0, end: 0.5, nodes: vec![0.0, 0.5], values: vec![0.6, 0.2] },
        Segment::ConstantCdf { start: 0.5, end: 1.0, value: 1.0 },
    ];
    assert!(ParisiMeasure::from_tiles(1.0, tiles).is_err());
}

#[test]
fn params_validation() {
    assert!(ModelParams::new(1.0, 1.0, 1.0).is_ok());
    assert!(ModelParams::new(0.0, 1.0, 1.0).is_err());
    assert!(ModelParams::new(1.0, -1.0, 1.0).is_err());
    assert!(ModelParams::new(1.0, 1.0, 1.0).unwrap().with_lattice(0).is_err());
    let p = ModelParams::new(2.0, 4.0, 1.0).unwrap();
    assert!((p.s_bar() - 0.5).abs() < 1e-15);
}

#[test]
fn measure_json_round_trip() {
    let formula = CdfFormula::FrsbPowerLaw { beta: 2.0, t: 1.0, g: 1.0, a: 1.0, gamma: 0.5, q_c: 3.0 };
    let z = ParisiMeasure::with_formula(3.0, 0.5, 2.5, formula).unwrap();
    let json = serde_json::to_string(&z).unwrap();
    let back: ParisiMeasure = serde_json::from_str(&json).unwrap();
    assert!(back.cdf_distance(&z, 10_000) < 1e-15);
    assert_eq!(serde_json::to_string(&Phase::OneRsb).unwrap(), "\"ONE_RSB\"");
}
