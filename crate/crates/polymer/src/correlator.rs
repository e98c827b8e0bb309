//! The disorder covariance `B` of the random potential.
//!
//! The random field `V_N` at a site has covariance
//! `E[V_N(u) V_N(u')] = N · B(‖u − u'‖²_N)`, where `B` is of Schoenberg form
//! `B(x) = c₀ + Σ wᵢ e^{−λᵢ² x}`. Three kinds are supported: the exponential
//! `g e^{−a x}`, the power law `g (a + x)^{−γ}` and a finite Schoenberg
//! mixture. All derivatives are analytic.

use std::num::NonZeroUsize;

use gauss_quad::GaussLaguerre;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_domain, Error, Result};
use crate::model::ModelParams;
use crate::numerics::log_grid;

/// Default number of Gauss–Laguerre nodes used to turn a power law into a
/// mixture of squared-exponential atoms.
pub const DEFAULT_MIXTURE_NODES: usize = 200;

/// One squared-exponential atom `weight · e^{−λ² x}` of a Schoenberg mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    /// Rate parameter λ > 0; the atom decays like `e^{−λ² x}`.
    pub lambda: f64,
    /// Positive weight of the atom.
    pub weight: f64,
}

/// The covariance function `B` and its kind-specific parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Correlator {
    /// `B(x) = g e^{−a x}`.
    Exponential {
        /// Amplitude `g > 0`.
        g: f64,
        /// Decay rate `a > 0`.
        a: f64,
    },
    /// `B(x) = g (a + x)^{−γ}`.
    PowerLaw {
        /// Amplitude `g > 0`.
        g: f64,
        /// Offset `a > 0`.
        a: f64,
        /// Decay exponent `γ > 0`.
        gamma: f64,
    },
    /// `B(x) = c₀ + Σ wᵢ e^{−λᵢ² x}`; with no atoms and `c₀ = 0` this is `B ≡ 0`.
    Mixture {
        /// Constant offset `c₀ ≥ 0` (nonzero values are outside the theory's
        /// assumptions; see [`Correlator::within_assumptions`]).
        c0: f64,
        /// The squared-exponential atoms.
        atoms: Vec<Atom>,
    },
}

/// Shape of `s ↦ U_B(s) = (2 t B″(2s))^{−1/3}`, which decides between the
/// one-step and full replica-symmetry-breaking scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UbShape {
    /// `U_B″ > 0`: at most one step of replica symmetry breaking.
    StrictlyConvex,
    /// `U_B″ < 0`: full replica symmetry breaking below the Larkin mass.
    StrictlyConcave,
    /// `U_B″ ≡ 0`: the borderline case (power law with γ = 1).
    Linear,
    /// The numeric sign test was not unanimous.
    Indeterminate,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    ensure_domain(v.is_finite() && v > 0.0, || {
        format!("correlator parameter {name} must be finite and positive, got {v}")
    })
}

impl Correlator {
    /// Exponential correlator `g e^{−a x}`.
    pub fn exponential(g: f64, a: f64) -> Result<Self> {
        let c = Correlator::Exponential { g, a };
        c.validate()?;
        Ok(c)
    }

    /// Power-law correlator `g (a + x)^{−γ}`.
    pub fn power_law(g: f64, a: f64, gamma: f64) -> Result<Self> {
        let c = Correlator::PowerLaw { g, a, gamma };
        c.validate()?;
        Ok(c)
    }

    /// Schoenberg mixture `c₀ + Σ wᵢ e^{−λᵢ² x}`.
    pub fn mixture(c0: f64, atoms: Vec<Atom>) -> Result<Self> {
        let c = Correlator::Mixture { c0, atoms };
        c.validate()?;
        Ok(c)
    }

    /// The trivial correlator `B ≡ 0` (no disorder).
    pub fn zero() -> Self {
        Correlator::Mixture { c0: 0.0, atoms: Vec::new() }
    }

    /// Checks the parameter constraints of the kind.
    pub fn validate(&self) -> Result<()> {
        match self {
            Correlator::Exponential { g, a } => {
                check_positive("g", *g)?;
                check_positive("a", *a)
            }
            Correlator::PowerLaw { g, a, gamma } => {
                check_positive("g", *g)?;
                check_positive("a", *a)?;
                check_positive("gamma", *gamma)
            }
            Correlator::Mixture { c0, atoms } => {
                ensure_domain(c0.is_finite() && *c0 >= 0.0, || {
                    format!("mixture offset c0 must be finite and nonnegative, got {c0}")
                })?;
                for atom in atoms {
                    check_positive("lambda", atom.lambda)?;
                    check_positive("weight", atom.weight)?;
                }
                Ok(())
            }
        }
    }

    /// True for `B ≡ 0`.
    pub fn is_zero(&self) -> bool {
        matches!(self, Correlator::Mixture { c0, atoms } if *c0 == 0.0 && atoms.is_empty())
    }

    /// False for mixtures with `c₀ > 0`: a constant offset lies outside the
    /// assumptions under which the variational theory is established. Such
    /// correlators are accepted and evaluated, but results are flagged.
    pub fn within_assumptions(&self) -> bool {
        !matches!(self, Correlator::Mixture { c0, .. } if *c0 > 0.0)
    }

    /// The `order`-th derivative of `B` at `x ≥ 0`, for `order ∈ {0, 1, 2, 3}`.
    pub fn eval_b(&self, x: f64, order: u32) -> Result<f64> {
        ensure_domain(x >= 0.0 && x.is_finite(), || format!("B evaluated at x = {x} < 0"))?;
        ensure_domain(order <= 3, || format!("derivative order {order} outside 0..=3"))?;
        Ok(self.deriv(x, order))
    }

    /// Unchecked `n`-th derivative (any `n`), used internally where the
    /// argument is known to be nonnegative.
    pub(crate) fn deriv(&self, x: f64, n: u32) -> f64 {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        match self {
            Correlator::Exponential { g, a } => sign * g * a.powi(n as i32) * (-a * x).exp(),
            Correlator::PowerLaw { g, a, gamma } => {
                let rising: f64 = (0..n).map(|k| gamma + k as f64).product();
                sign * g * rising * (a + x).powf(-gamma - n as f64)
            }
            Correlator::Mixture { c0, atoms } => {
                let base = if n == 0 { *c0 } else { 0.0 };
                base + sign
                    * atoms
                        .iter()
                        .map(|at| {
                            let l2 = at.lambda * at.lambda;
                            at.weight * l2.powi(n as i32) * (-l2 * x).exp()
                        })
                        .sum::<f64>()
            }
        }
    }

    /// `B(x)`.
    pub fn b(&self, x: f64) -> f64 {
        self.deriv(x, 0)
    }

    /// `B′(x)`.
    pub fn b1(&self, x: f64) -> f64 {
        self.deriv(x, 1)
    }

    /// `B″(x)`.
    pub fn b2(&self, x: f64) -> f64 {
        self.deriv(x, 2)
    }

    /// `B‴(x)`.
    pub fn b3(&self, x: f64) -> f64 {
        self.deriv(x, 3)
    }

    /// `U_B(s) = (2 B″(2s) t)^{−1/3}`.
    pub fn ub(&self, s: f64, t: f64) -> Result<f64> {
        self.check_ub_args(s, t)?;
        Ok((2.0 * self.b2(2.0 * s) * t).powf(-1.0 / 3.0))
    }

    /// `U_B′(s) = (2t)^{−1/3} · (−2 B‴(2s)/3) · B″(2s)^{−4/3}`.
    pub fn ub_prime(&self, s: f64, t: f64) -> Result<f64> {
        self.check_ub_args(s, t)?;
        let b2 = self.b2(2.0 * s);
        let b3 = self.b3(2.0 * s);
        Ok((2.0 * t).powf(-1.0 / 3.0) * (-2.0 * b3 / 3.0) * b2.powf(-4.0 / 3.0))
    }

    fn check_ub_args(&self, s: f64, t: f64) -> Result<()> {
        ensure_domain(s >= 0.0 && s.is_finite(), || format!("U_B evaluated at s = {s}"))?;
        ensure_domain(t > 0.0 && t.is_finite(), || format!("U_B needs t > 0, got {t}"))?;
        ensure_domain(self.b2(2.0 * s) > 0.0, || {
            format!("U_B undefined: B''(2s) = 0 at s = {s} (degenerate correlator)")
        })
    }

    /// Classifies the shape of `U_B`. Closed-form kinds are classified
    /// analytically; mixtures by the sign of `U_B″` on a log grid of
    /// `s ∈ [10⁻⁶, 10⁶]`, requiring unanimity.
    pub fn ub_shape(&self, _t: f64) -> UbShape {
        match self {
            Correlator::Exponential { .. } => UbShape::StrictlyConvex,
            Correlator::PowerLaw { gamma, .. } => {
                if *gamma > 1.0 {
                    UbShape::StrictlyConvex
                } else if *gamma < 1.0 {
                    UbShape::StrictlyConcave
                } else {
                    UbShape::Linear
                }
            }
            Correlator::Mixture { atoms, .. } => mixture_ub_shape(atoms),
        }
    }

    /// True iff `limsup_{x→∞} B″(x) x³ = ∞`, in which case the massless model
    /// breaks replica symmetry at every temperature.
    pub fn massless_rsb_criterion(&self) -> bool {
        match self {
            Correlator::PowerLaw { gamma, .. } => *gamma < 1.0,
            // Exponential decay (of every atom) beats x³.
            Correlator::Exponential { .. } | Correlator::Mixture { .. } => false,
        }
    }

    /// Converts to an equivalent Schoenberg mixture. Power laws are
    /// discretised with [`DEFAULT_MIXTURE_NODES`] generalized Gauss–Laguerre
    /// nodes; see [`Correlator::to_mixture_with_nodes`].
    pub fn to_mixture(&self) -> Result<Correlator> {
        self.to_mixture_with_nodes(DEFAULT_MIXTURE_NODES)
    }

    /// Converts to a mixture, discretising a power law with `nodes` nodes.
    ///
    /// Uses `(1+u)^{−γ} = (1/Γ(γ)) ∫₀^∞ e^{−s(1+u)} s^{γ−1} ds` (the λ-integral
    /// representation with `s = λ²`), integrated by Gauss–Laguerre quadrature
    /// with weight `s^{γ−1} e^{−s}`, so every node becomes an atom
    /// `λ = √(s/a)`. Atoms whose weight underflows to zero are dropped.
    pub fn to_mixture_with_nodes(&self, nodes: usize) -> Result<Correlator> {
        match self {
            Correlator::Exponential { g, a } => Correlator::mixture(0.0, vec![Atom { lambda: a.sqrt(), weight: *g }]),
            Correlator::PowerLaw { g, a, gamma } => {
                let n = NonZeroUsize::new(nodes)
                    .ok_or_else(|| Error::Domain("mixture node count must be positive".into()))?;
                let alpha = (gamma - 1.0)
                    .try_into()
                    .map_err(|_| Error::Domain(format!("invalid Laguerre exponent {}", gamma - 1.0)))?;
                let rule = GaussLaguerre::new(n, alpha);
                let scale = g * a.powf(-gamma) / statrs::function::gamma::gamma(*gamma);
                let atoms = rule
                    .iter()
                    .filter(|(_, w)| *w > 0.0)
                    .map(|(s, w)| Atom { lambda: (s / a).sqrt(), weight: scale * w })
                    .filter(|at| at.weight > 0.0 && at.lambda > 0.0)
                    .collect();
                Correlator::mixture(0.0, atoms)
            }
            Correlator::Mixture { .. } => Ok(self.clone()),
        }
    }

    /// The amplitude `g` of a closed-form kind (`None` for mixtures).
    pub fn amplitude(&self) -> Option<f64> {
        match self {
            Correlator::Exponential { g, .. } | Correlator::PowerLaw { g, .. } => Some(*g),
            Correlator::Mixture { .. } => None,
        }
    }

    /// The same correlator with amplitude `g = 1` (mixtures unchanged).
    pub fn with_unit_amplitude(&self) -> Correlator {
        match self {
            Correlator::Exponential { a, .. } => Correlator::Exponential { g: 1.0, a: *a },
            Correlator::PowerLaw { a, gamma, .. } => Correlator::PowerLaw { g: 1.0, a: *a, gamma: *gamma },
            Correlator::Mixture { .. } => self.clone(),
        }
    }
}

/// The amplitude reduction `(μ, t, β) ↦ (μ/g, t/g, βg)` quoted alongside the
/// model definition, paired with the unit-amplitude correlator.
///
/// This helper is never applied implicitly. Note that it is *not* an exact
/// symmetry of the stationarity system; see [`amplitude_symmetry`].
pub fn amplitude_normalization(params: &ModelParams, corr: &Correlator) -> (ModelParams, Correlator) {
    let g = corr.amplitude().unwrap_or(1.0);
    let mut p = params.clone();
    p.mu /= g;
    p.t /= g;
    p.beta *= g;
    (p, corr.with_unit_amplitude())
}

/// The exact amplitude symmetry `(μ, t, β) ↦ (μ/√g, t/√g, β√g)` with
/// `B ↦ B/g`: it maps the RS test function onto itself under `s ↦ √g·s` and
/// leaves the Larkin equation invariant.
pub fn amplitude_symmetry(params: &ModelParams, corr: &Correlator) -> (ModelParams, Correlator) {
    let g = corr.amplitude().unwrap_or(1.0);
    let r = g.sqrt();
    let mut p = params.clone();
    p.mu /= r;
    p.t /= r;
    p.beta *= r;
    (p, corr.with_unit_amplitude())
}

/// Sign test of `U_B″` for a mixture.
///
/// `sign U_B″(s) = sign(16 B‴(2s)² − 12 B″(2s) B⁗(2s))`. The moments are
/// computed relative to the slowest atom so that nothing underflows at large
/// `s`.
fn mixture_ub_shape(atoms: &[Atom]) -> UbShape {
    if atoms.is_empty() {
        return UbShape::Indeterminate;
    }
    let lmin2 = atoms.iter().map(|a| a.lambda * a.lambda).fold(f64::INFINITY, f64::min);
    let (mut pos, mut neg, mut zero) = (0usize, 0usize, 0usize);
    for s in log_grid(1e-6, 1e6, 1000) {
        let x = 2.0 * s;
        let mut m = [0.0f64; 3];
        for at in atoms {
            let l2 = at.lambda * at.lambda;
            let e = at.weight * (-(l2 - lmin2) * x).exp();
            m[0] += e * l2.powi(2);
            m[1] += e * l2.powi(3);
            m[2] += e * l2.powi(4);
        }
        let d = 16.0 * m[1] * m[1] - 12.0 * m[0] * m[2];
        let scale = 16.0 * m[1] * m[1] + 12.0 * m[0] * m[2];
        if d.abs() <= 1e-12 * scale {
            zero += 1;
        } else if d > 0.0 {
            pos += 1;
        } else {
            neg += 1;
        }
    }
    match (pos, neg, zero) {
        (_, 0, 0) => UbShape::StrictlyConvex,
        (0, _, 0) => UbShape::StrictlyConcave,
        (0, 0, _) => UbShape::Linear,
        _ => UbShape::Indeterminate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        let pl = Correlator::power_law(1.0, 1.0, 2.0).unwrap();
        assert_eq!(pl.eval_b(0.0, 0).unwrap(), 1.0);
        assert_eq!(pl.eval_b(0.0, 2).unwrap(), 6.0);
        let ex = Correlator::exponential(1.0, 1.0).unwrap();
        assert!((ex.eval_b(2.0, 1).unwrap() + (-2f64).exp()).abs() < 1e-16);
        assert!(ex.eval_b(-1.0, 0).is_err());
        assert!(ex.eval_b(1.0, 4).is_err());
    }

    #[test]
    fn ub_of_exponential_at_zero() {
        let ex = Correlator::exponential(1.0, 1.0).unwrap();
        assert!((ex.ub(0.0, 1.0).unwrap() - 2f64.powf(-1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn ub_prime_matches_finite_difference() {
        for c in [Correlator::exponential(1.3, 0.7).unwrap(), Correlator::power_law(1.0, 1.0, 0.5).unwrap()] {
            for s in [0.1, 1.0, 3.0] {
                let h = 1e-5;
                let fd = (c.ub(s + h, 1.0).unwrap() - c.ub(s - h, 1.0).unwrap()) / (2.0 * h);
                let an = c.ub_prime(s, 1.0).unwrap();
                assert!((fd - an).abs() < 1e-8 * an.abs().max(1.0), "{fd} vs {an}");
            }
        }
    }

    #[test]
    fn shapes_and_massless_criterion() {
        let p = |g| Correlator::power_law(1.0, 1.0, g).unwrap();
        assert_eq!(p(2.0).ub_shape(1.0), UbShape::StrictlyConvex);
        assert_eq!(p(0.5).ub_shape(1.0), UbShape::StrictlyConcave);
        assert_eq!(p(1.0).ub_shape(1.0), UbShape::Linear);
        let ex = Correlator::exponential(1.0, 1.0).unwrap();
        assert_eq!(ex.ub_shape(1.0), UbShape::StrictlyConvex);
        assert_eq!(ex.to_mixture().unwrap().ub_shape(1.0), UbShape::StrictlyConvex);
        assert!(p(0.5).massless_rsb_criterion());
        assert!(!p(1.0).massless_rsb_criterion());
        assert!(!ex.massless_rsb_criterion());
        assert_eq!(Correlator::zero().ub_shape(1.0), UbShape::Indeterminate);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Correlator::exponential(0.0, 1.0).is_err());
        assert!(Correlator::power_law(1.0, -1.0, 1.0).is_err());
        assert!(Correlator::mixture(-0.1, vec![]).is_err());
        let flagged = Correlator::mixture(0.5, vec![Atom { lambda: 1.0, weight: 1.0 }]).unwrap();
        assert!(!flagged.within_assumptions());
    }
}
