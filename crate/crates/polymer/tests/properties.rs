//! Property-based invariants across the modules.

#[path = "support/props.rs"]
mod props;

use props::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(config())]

    #[test]
    fn measure_cdf_and_gap_are_monotone(z in measure()) {
        props::measure_cdf_and_gap_are_monotone(&z)?;
    }

    #[test]
    fn gap_is_lipschitz_and_concave(z in measure(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        props::gap_is_lipschitz_and_concave(&z, a, b)?;
    }

    #[test]
    fn translation_commutes_with_the_gap(z in measure(), r in -0.5f64..1.0) {
        props::translation_commutes_with_the_gap(&z, r)?;
    }

    #[test]
    fn resolvents_are_monotone_and_convex(k in kernel(), mu in 0.01f64..50.0) {
        props::resolvents_are_monotone_and_convex(&k, mu)?;
    }

    #[test]
    fn kernel_inverses_round_trip(k in kernel(), mu in 0.01f64..50.0) {
        props::kernel_inverses_round_trip(&k, mu)?;
    }

    #[test]
    fn correlator_derivatives_alternate_in_sign(c in correlator(), x in 0.0f64..20.0) {
        props::correlator_derivatives_alternate_in_sign(&c, x)?;
    }

    #[test]
    fn hamiltonian_gradient_matches_finite_differences(seed in 0u64..1000, n in 1usize..4, l in 1usize..5) {
        props::hamiltonian_gradient_matches_finite_differences(seed, n, l)?;
    }

    #[test]
    fn green_is_negative_increasing_and_concave(x in 0.01f64..20.0, t in 0.2f64..3.0, mu in 0.01f64..20.0) {
        props::green_is_negative_increasing_and_concave(x, t, mu)?;
    }

    #[test]
    fn rs_displacement_is_nonnegative_and_even(beta in 0.1f64..1.5, mu in 0.01f64..10.0, x in 0.0f64..30.0) {
        props::rs_displacement_is_nonnegative_and_even(beta, mu, x)?;
    }

    #[test]
    fn functional_is_midpoint_convex_in_the_measure(a in measure(), raw in raw_atoms(), beta in 0.3f64..3.0, mu in 0.05f64..3.0) {
        props::functional_is_midpoint_convex_in_the_measure(&a, &raw, beta, mu)?;
    }
}
