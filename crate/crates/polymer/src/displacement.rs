//! Mean-squared displacement `H(x) = lim 𝔼⟨‖u(x) − u(0)‖²_N⟩` and the
//! wandering exponent of its massless limit.
//!
//! The generic formula for a solved pair `(q_c, ζ_c)` is
//!
//! `H = −(2/β)𝔾(1/(β²(q_c − q_*)²t)) + ∫₀^{q_*} 𝔾′(1/(β²δ(u)²t)) · 4/(β³δ(u)³t) du`,
//!
//! with `𝔾 = 𝔾_{x,t}` the regularized continuum Green's function. Its
//! lattice counterpart replaces `𝔾`, `1/(x²t)` by `G_{x,t,L}`, `K`. The
//! RS, one-step and massless FRSB closed forms follow by integrating the
//! constant and linear pieces of `δ` explicitly.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma as gamma_fn;

use crate::correlator::Correlator;
use crate::error::{ensure_domain, Error, Result};
use crate::kernels::ResolventKernel;
use crate::model::{ModelParams, Phase, RsbSolution};
use crate::numerics::integrate;
use crate::phase::{is_rs, larkin_mass, massless_transition_beta};

/// Absolute tolerance of the quadratures in this module.
pub const DISPLACEMENT_TOL: f64 = 1e-12;
/// Relative size of the analytically integrated tail of the massless FRSB
/// integral.
pub const TAIL_REL_TOL: f64 = 1e-8;
/// The tail is switched to its series once `|x|√(y/t)` drops below this.
const TAIL_SWITCH_Z: f64 = 1e-3;

/// `𝔾_{x,t}(μ)` (continuum).
pub fn green(x: f64, t: f64, mu: f64) -> f64 {
    let z = x.abs() * (mu / t).sqrt();
    (-z).exp_m1() / (2.0 * (t * mu).sqrt())
}

/// `𝔾′_{x,t}(μ)` (continuum).
pub fn green_prime(x: f64, t: f64, mu: f64) -> f64 {
    let z = x.abs() * (mu / t).sqrt();
    ou_profile(z) / (4.0 * (t * mu * mu * mu).sqrt())
}

/// `f(z) = 1 − e^{−z} − z e^{−z}`, with its series below `z = 10⁻³`.
fn ou_profile(z: f64) -> f64 {
    if z < 1e-3 {
        z * z * (0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0)
    } else {
        -(-z).exp_m1() - z * (-z).exp()
    }
}

/// The `μ → 0` expansion `𝔾_{x,t}(μ) = −|x|/(2t) + x²√μ/(4t^{3/2}) − |x|³μ/(12t²) + O(μ^{3/2})`,
/// returned as its three coefficients.
pub fn green_small_mu_coefficients(x: f64, t: f64) -> [f64; 3] {
    let ax = x.abs();
    [-ax / (2.0 * t), ax * ax / (4.0 * t.powf(1.5)), -ax.powi(3) / (12.0 * t * t)]
}

/// A displacement evaluation request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementQuery {
    /// Model parameters (`μ > 0`).
    pub params: ModelParams,
    /// The solved pair.
    pub solution: RsbSolution,
    /// Spatial separation.
    pub x: f64,
}

impl DisplacementQuery {
    /// Builds a query, checking that the solution is stationary to `1e-8`.
    pub fn new(params: ModelParams, solution: RsbSolution, x: f64) -> Result<Self> {
        ensure_domain(x.is_finite(), || format!("separation x = {x} is not finite"))?;
        if !solution.residuals.is_stationary(1e-8) {
            return Err(Error::Precondition(format!(
                "solution residual {} exceeds the solver tolerance",
                solution.residuals.max_defect()
            )));
        }
        Ok(Self { params, solution, x })
    }

    /// [`h_continuum`] of the query.
    pub fn h(&self) -> Result<f64> {
        h_continuum(&self.params, &self.solution, self.x)
    }
}

/// The generic continuum displacement of a solved pair, by adaptive
/// quadrature over the pieces of `ζ_c`.
pub fn h_continuum(params: &ModelParams, sol: &RsbSolution, x: f64) -> Result<f64> {
    params.validate()?;
    let (beta, t) = (params.beta, params.t);
    let zeta = &sol.measure;
    let qs = zeta.q_star();
    let gap = sol.q_c - qs;
    ensure_domain(gap > 0.0, || "q_c - q_* must be positive".into())?;
    let first = -(2.0 / beta) * green(x, t, 1.0 / (beta * beta * gap * gap * t));
    let integral = zeta.integrate_gap(0.0, qs, false, DISPLACEMENT_TOL, |_, d| {
        let y = 1.0 / (beta * beta * d * d * t);
        green_prime(x, t, y) * 4.0 / (beta * beta * beta * d * d * d * t)
    })?;
    Ok(first + integral)
}

/// RS closed form `−(2/β)𝔾(μ) − 4B′(2/(β√(μt)))𝔾′(μ)`.
pub fn h_rs(params: &ModelParams, corr: &Correlator, x: f64) -> Result<f64> {
    params.validate()?;
    if !is_rs(params, corr) {
        return Err(Error::Precondition("h_rs needs an RS point".into()));
    }
    let (beta, mu, t) = (params.beta, params.mu, params.t);
    let b1 = corr.b1(2.0 / (beta * (mu * t).sqrt()));
    Ok(-(2.0 / beta) * green(x, t, mu) - 4.0 * b1 * green_prime(x, t, mu))
}

/// One-step closed form
/// `−(2/β)𝔾(Y) + 4q₀√(μ³t)𝔾′(μ) − (2/(βm))(𝔾(μ) − 𝔾(Y))`, `Y = 1/(β²(q_c − q_*)²t)`.
pub fn h_1rsb(params: &ModelParams, sol: &RsbSolution, x: f64) -> Result<f64> {
    params.validate()?;
    if sol.phase != Phase::OneRsb {
        return Err(Error::Precondition(format!("h_1rsb needs a one-step solution, got {}", sol.phase)));
    }
    let get = |k: &str| {
        sol.extras.get(k).copied().ok_or_else(|| Error::Precondition(format!("one-step solution lacks `{k}`")))
    };
    let (q0, m) = (get("q_0")?, get("m")?);
    let (beta, mu, t) = (params.beta, params.mu, params.t);
    let gap = sol.q_c - sol.q_star();
    let y = 1.0 / (beta * beta * gap * gap * t);
    let gy = green(x, t, y);
    Ok(-(2.0 / beta) * gy + 4.0 * q0 * (mu * mu * mu * t).sqrt() * green_prime(x, t, mu)
        - (2.0 / (beta * m)) * (green(x, t, mu) - gy))
}

/// Lattice displacement
/// `−(2/β)G(K(β(q_L − q_{L,*}))) − 2∫₀^{q_{L,*}} G′(K(βδ_L))K′(βδ_L) du`
/// for a pair solving the lattice stationarity system of `kernel`.
pub fn h_discrete(kernel: &ResolventKernel, params: &ModelParams, sol: &RsbSolution, x: f64) -> Result<f64> {
    let beta = params.beta;
    let zeta = &sol.measure;
    let qs = zeta.q_star();
    let first = -(2.0 / beta) * kernel.green(kernel.k(beta * (sol.q_c - qs))?, x, 0)?;
    let mut err = None;
    let integral = zeta.integrate_gap(0.0, qs, false, DISPLACEMENT_TOL, |_, d| {
        let eval = || -> Result<f64> {
            let kk = kernel.k(beta * d)?;
            Ok(kernel.green(kk, x, 1)? * kernel.k_prime(beta * d)?)
        };
        eval().unwrap_or_else(|e| {
            err = Some(e);
            f64::NAN
        })
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(first - 2.0 * integral)
}

/// Massless-limit FRSB displacement for the unit power law `B = (1 + x)^{−γ}`:
///
/// `H = −(2/β)𝔾(μ_Lar) + ∫_{1+2/(β√(μ_Lar t))}^{c₀μ^{−3/(2(γ+2))}} 𝔾′(y(u)) · 4γ(γ+1)/u^{γ+2} du`,
/// `y(u) = (2γ(γ+1))^{2/3}/(u^{2(γ+2)/3}t^{1/3})`.
///
/// `mu = 0` takes the upper limit to infinity. For `mu > 0` this is the
/// contribution of the continuous part of `ζ_c` only; the full finite-mass
/// displacement adds the atom term `4q₀√(μ³t)𝔾′(μ)`, which vanishes like `√μ`.
/// The integral runs on
/// logarithmic panels while `|x|√(y/t) ≥ 10⁻³`; beyond that the integrand's
/// series `f(z) = z²/2 − z³/3 + z⁴/8 − z⁵/30` (each term a power of `u`
/// decaying at least like `u^{−2(γ+2)/3}`) is integrated in closed form, so the
/// truncation error is far below [`TAIL_REL_TOL`].
pub fn h_frsb_massless(beta: f64, t: f64, gamma: f64, x: f64, mu: f64) -> Result<f64> {
    ensure_domain(beta > 0.0 && t > 0.0, || "beta and t must be positive".into())?;
    ensure_domain(gamma > 0.0 && gamma < 1.0, || format!("FRSB needs 0 < gamma < 1, got {gamma}"))?;
    ensure_domain(mu >= 0.0 && mu.is_finite(), || format!("mass {mu} must be finite and >= 0"))?;
    let corr = Correlator::power_law(1.0, 1.0, gamma)?;
    let mu_lar =
        larkin_mass(beta, t, &corr).ok_or_else(|| Error::Precondition("no Larkin mass for this power law".into()))?;
    ensure_domain(mu < mu_lar, || format!("mu = {mu} is not below the Larkin mass {mu_lar}"))?;
    let gg = 2.0 * gamma * (gamma + 1.0);
    let p = 2.0 * (gamma + 2.0) / 3.0;
    let c = gg.powf(2.0 / 3.0) / t.cbrt();
    let u_lo = 1.0 + 2.0 / (beta * (mu_lar * t).sqrt());
    let u_hi = if mu == 0.0 {
        f64::INFINITY
    } else {
        let c0 = (gg / t.sqrt()).powf(1.0 / (gamma + 2.0));
        c0 * mu.powf(-3.0 / (2.0 * (gamma + 2.0)))
    };
    let first = -(2.0 / beta) * green(x, t, mu_lar);
    if x == 0.0 || u_hi <= u_lo {
        return Ok(first);
    }
    // The integrand equals f(z(u))/2 with z(u) = |x|√(c/t) u^{−p/2}.
    let kx = x.abs() * (c / t).sqrt();
    let integrand = |u: f64| {
        let y = c * u.powf(-p);
        green_prime(x, t, y) * 2.0 * gg / u.powf(gamma + 2.0)
    };
    // Switch point where z = TAIL_SWITCH_Z.
    let u_switch = (kx / TAIL_SWITCH_Z).powf(2.0 / p).max(u_lo);
    let u_mid = u_switch.min(u_hi);
    let mut body = 0.0;
    let mut a = u_lo;
    while a < u_mid {
        let b = (a * 10.0).min(u_mid);
        body += integrate(integrand, a, b, DISPLACEMENT_TOL, 1e-13)?;
        a = b;
    }
    let mut tail = 0.0;
    if u_hi > u_switch {
        // ½∫ Σ_k c_k (kx)^k u^{−kp/2} du on [u_switch, u_hi].
        for (k, ck) in [(2, 0.5), (3, -1.0 / 3.0), (4, 1.0 / 8.0), (5, -1.0 / 30.0)] {
            let e = 1.0 - k as f64 * p / 2.0;
            ensure_domain(e < 0.0, || "tail exponent must be integrable".into())?;
            let anti = |u: f64| if u.is_infinite() { 0.0 } else { u.powf(e) / e };
            tail += 0.5 * ck * kx.powi(k) * (anti(u_hi) - anti(u_switch));
        }
        let next = 0.5 * kx.powi(6) / 144.0 * u_switch.powf(1.0 - 3.0 * p) / (3.0 * p - 1.0);
        if next > TAIL_REL_TOL * (body + tail).abs().max(f64::MIN_POSITIVE) {
            return Err(Error::NonConvergence {
                what: "massless FRSB displacement tail truncation".into(),
                residual: next,
            });
        }
    }
    Ok(first + body + tail)
}

/// Log–log slope `ln(H(x₂)/H(x₁))/ln(x₂/x₁)` of [`h_frsb_massless`] at `μ = 0`.
pub fn frsb_loglog_slope(beta: f64, t: f64, gamma: f64, x1: f64, x2: f64) -> Result<f64> {
    let h1 = h_frsb_massless(beta, t, gamma, x1, 0.0)?;
    let h2 = h_frsb_massless(beta, t, gamma, x2, 0.0)?;
    Ok((h2 / h1).ln() / (x2 / x1).ln())
}

/// Diffusive or superdiffusive regime of the massless model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WanderingRegime {
    /// RS massless limit: `H → |x|/β`.
    DiffusiveRs,
    /// RSB massless limit with `η = 1/2`.
    DiffusiveRsb,
    /// Power law with `γ < 1`: `η = 3/(2(γ+2))`.
    SuperdiffusiveFrsb,
}

/// The wandering exponent `η` (`H(x) ≍ x^{2η}`) and, when superdiffusive, the
/// prefactor of `H(x) ~ C x^{2η}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WanderingExponent {
    /// Exponent `η`.
    pub eta: f64,
    /// Printed prefactor `(2γ(γ+1)/t²)^{1/(γ+2)} Γ(2 − 3/(γ+2))`.
    pub prefactor: Option<f64>,
    /// Prefactor re-derived from the massless integral (half the printed one).
    pub prefactor_rederived: Option<f64>,
    /// Regime label.
    pub regime: WanderingRegime,
}

/// `(2γ(γ+1)/t²)^{1/(γ+2)} Γ(2 − 3/(γ+2))`.
pub fn printed_prefactor(gamma: f64, t: f64) -> f64 {
    (2.0 * gamma * (gamma + 1.0) / (t * t)).powf(1.0 / (gamma + 2.0)) * gamma_fn(2.0 - 3.0 / (gamma + 2.0))
}

/// Analytic wandering exponent for the closed-form correlators.
///
/// Power laws with `γ < 1` are superdiffusive with `η = 3/(2(γ+2))`; power
/// laws with `γ ≥ 1` and exponentials are diffusive (`η = 1/2`), RS below the
/// massless transition temperature and RSB above it. Mixtures have no
/// analytic tail classification.
pub fn wandering_exponent(corr: &Correlator, t: f64, beta: f64) -> Result<WanderingExponent> {
    ensure_domain(beta > 0.0 && t > 0.0, || "beta and t must be positive".into())?;
    let diffusive = |corr: &Correlator| {
        let rs = match massless_transition_beta(t, corr) {
            Some(bc) => beta < bc,
            None => !corr.massless_rsb_criterion(),
        };
        WanderingExponent {
            eta: 0.5,
            prefactor: None,
            prefactor_rederived: None,
            regime: if rs { WanderingRegime::DiffusiveRs } else { WanderingRegime::DiffusiveRsb },
        }
    };
    match corr {
        Correlator::PowerLaw { g, a, gamma } if *gamma < 1.0 => {
            let printed = (*g == 1.0 && *a == 1.0).then(|| printed_prefactor(*gamma, t));
            Ok(WanderingExponent {
                eta: 3.0 / (2.0 * (gamma + 2.0)),
                prefactor: printed,
                prefactor_rederived: printed.map(|p| 0.5 * p),
                regime: WanderingRegime::SuperdiffusiveFrsb,
            })
        }
        Correlator::PowerLaw { .. } | Correlator::Exponential { .. } => Ok(diffusive(corr)),
        Correlator::Mixture { .. } => {
            Err(Error::Unsupported("mixtures have no analytic tail classification of the wandering exponent".into()))
        }
    }
}
