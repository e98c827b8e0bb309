//! Monte Carlo sampling of the finite `(N, L)` Gibbs measure.
//!
//! The configuration is `u = (u(x))_{x ∈ Λ_L}` with `u(x) ∈ ℝ^N`, stored
//! row-major as `u[x·N + i]`. The Hamiltonian is
//!
//! `ℋ(u) = (1/2)L^{−1/2} Σ_x (μ‖u(x)‖² − t(Δ_L u(x), u(x))) + L^{−1/4} Σ_x V_x(u(x))`
//!
//! with `Δ_L u(x) = L(u(x+1) + u(x−1) − 2u(x))` (periodic) and independent
//! random potentials `V_x` of covariance `N·B(‖u − u′‖²_N)`, represented by
//! random Fourier features of the Schoenberg atoms of `B`. Chains sample
//! `exp(−βℋ)` with Metropolis-adjusted Langevin proposals preconditioned by
//! the covariance `L^{1/2}(μ − tΔ_L)^{−1}/β` of the disorder-free measure.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlator::Correlator;
use crate::error::{ensure_domain, Error, Result};
use crate::model::ModelParams;

/// Default number of random features per mixture atom.
pub const DEFAULT_FEATURES: usize = 4096;
/// Fraction of the steps spent in burn-in (with step-size tuning).
pub const BURN_IN_FRACTION: f64 = 0.2;
/// Number of batches used for batch-means error bars.
pub const N_BATCHES: usize = 32;
/// Default number of disorder realizations.
pub const DEFAULT_DISORDER_DRAWS: usize = 8;
/// Acceptance window targeted during burn-in.
pub const ACCEPTANCE_WINDOW: (f64, f64) = (0.4, 0.7);
/// Acceptance rate aimed at by the burn-in adaptation.
const TARGET_ACCEPTANCE: f64 = 0.55;
/// Steps between step-size adjustments during burn-in.
const TUNE_INTERVAL: usize = 50;

const ENV_TAG: u64 = 0x656e_7669_726f_6e6d;
const CHAIN_TAG: u64 = 0x6368_6169_6e73_7465;

/// A ChaCha8 stream keyed by `(seed, tag)` and the stream id `stream`.
fn keyed_rng(seed: u64, tag: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag);
    rng.set_stream(stream);
    rng
}

/// Random-feature expansion of one site's potential:
/// `V(u) = Σ_k c_k cos(ω_k·u + φ_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SitePotential {
    /// Frequencies, `n_features × N`, row-major.
    pub omega: Vec<f64>,
    /// Phases in `[0, 2π)`.
    pub phase: Vec<f64>,
    /// Coefficients `√N · √w_i · √(2/M) · g_k` with `g_k ~ N(0, 1)`.
    pub coef: Vec<f64>,
}

/// One realization of the independent site potentials `V_{N,x}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentRealization {
    /// Dimension `N`.
    pub n: usize,
    /// Lattice size `L`.
    pub l: usize,
    /// Features per atom `M`.
    pub n_features: usize,
    /// Seed the realization was drawn from.
    pub seed: u64,
    /// Disorder-draw index (stream key).
    pub draw: u64,
    /// Site potentials, one per `x ∈ Λ_L`.
    pub sites: Vec<SitePotential>,
}

impl EnvironmentRealization {
    /// `V_x(v)` for `v ∈ ℝ^N`.
    pub fn potential(&self, x: usize, v: &[f64]) -> f64 {
        let s = &self.sites[x];
        let n = self.n;
        s.coef.iter().enumerate().map(|(k, c)| c * (dot(&s.omega[k * n..(k + 1) * n], v) + s.phase[k]).cos()).sum()
    }

    /// `V_x(v)`, accumulating `scale · ∇V_x(v)` into `grad`.
    pub fn potential_and_gradient(&self, x: usize, v: &[f64], scale: f64, grad: &mut [f64]) -> f64 {
        let s = &self.sites[x];
        let n = self.n;
        let mut value = 0.0;
        for (k, c) in s.coef.iter().enumerate() {
            let w = &s.omega[k * n..(k + 1) * n];
            let (sin, cos) = (dot(w, v) + s.phase[k]).sin_cos();
            value += c * cos;
            let f = -scale * c * sin;
            for (g, wi) in grad.iter_mut().zip(w) {
                *g += f * wi;
            }
        }
        value
    }

    /// True when the potential vanishes identically.
    pub fn is_zero(&self) -> bool {
        self.sites.iter().all(|s| s.coef.is_empty())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Draws the site potentials for disorder draw `draw`.
///
/// Each Schoenberg atom `w e^{−λ²x}` contributes `M` features with
/// frequencies of per-coordinate variance `2λ²/N`, uniform phases and
/// standard Gaussian amplitudes, so that
/// `𝔼[V(u)V(u′)] = N Σ w e^{−λ²‖u − u′‖²_N} = N·B(‖u − u′‖²_N)`.
/// Power laws are first converted to a mixture. Streams are keyed by
/// `(seed, draw, x)`.
pub fn sample_environment_draw(
    corr: &Correlator,
    n: usize,
    l: usize,
    n_features: usize,
    seed: u64,
    draw: u64,
) -> Result<EnvironmentRealization> {
    ensure_domain(n >= 1 && l >= 1, || "N and L must be at least 1".into())?;
    ensure_domain(n_features >= 1, || "the feature count M must be at least 1".into())?;
    let Correlator::Mixture { c0, atoms } = corr.to_mixture()? else {
        return Err(Error::Internal("to_mixture returned a non-mixture".into()));
    };
    if c0 > 0.0 {
        return Err(Error::Unsupported(format!(
            "constant offset c0 = {c0} has no square-integrable random-feature form"
        )));
    }
    let sites = (0..l)
        .map(|x| {
            let mut rng = keyed_rng(seed, ENV_TAG, (draw << 24) | x as u64);
            let k_total = atoms.len() * n_features;
            let mut site = SitePotential {
                omega: Vec::with_capacity(k_total * n),
                phase: Vec::with_capacity(k_total),
                coef: Vec::with_capacity(k_total),
            };
            for atom in &atoms {
                let sd = (2.0 * atom.lambda * atom.lambda / n as f64).sqrt();
                let c = (n as f64).sqrt() * atom.weight.sqrt() * (2.0 / n_features as f64).sqrt();
                for _ in 0..n_features {
                    for _ in 0..n {
                        let z: f64 = rng.sample(StandardNormal);
                        site.omega.push(sd * z);
                    }
                    site.phase.push(rng.gen::<f64>() * 2.0 * PI);
                    let g: f64 = rng.sample(StandardNormal);
                    site.coef.push(c * g);
                }
            }
            site
        })
        .collect();
    Ok(EnvironmentRealization { n, l, n_features, seed, draw, sites })
}

/// [`sample_environment_draw`] for draw 0.
pub fn sample_environment(
    corr: &Correlator,
    n: usize,
    l: usize,
    n_features: usize,
    seed: u64,
) -> Result<EnvironmentRealization> {
    sample_environment_draw(corr, n, l, n_features, seed, 0)
}

/// `Δ_L u` applied coordinatewise.
fn laplacian(u: &[f64], n: usize, l: usize) -> Vec<f64> {
    let lf = l as f64;
    let mut out = vec![0.0; u.len()];
    for x in 0..l {
        let (xp, xm) = ((x + 1) % l, (x + l - 1) % l);
        for i in 0..n {
            out[x * n + i] = lf * (u[xp * n + i] + u[xm * n + i] - 2.0 * u[x * n + i]);
        }
    }
    out
}

fn check_shape(u: &[f64], env: &EnvironmentRealization) -> Result<()> {
    ensure_domain(u.len() == env.n * env.l, || {
        format!("configuration has {} entries, expected L·N = {}", u.len(), env.n * env.l)
    })
}

/// `ℋ(u)`.
pub fn hamiltonian(u: &[f64], env: &EnvironmentRealization, params: &ModelParams) -> Result<f64> {
    Ok(energy_and_gradient(u, env, params)?.0)
}

/// `∇ℋ(u)`.
pub fn gradient(u: &[f64], env: &EnvironmentRealization, params: &ModelParams) -> Result<Vec<f64>> {
    Ok(energy_and_gradient(u, env, params)?.1)
}

/// `(ℋ(u), ∇ℋ(u))`.
pub fn energy_and_gradient(u: &[f64], env: &EnvironmentRealization, params: &ModelParams) -> Result<(f64, Vec<f64>)> {
    check_shape(u, env)?;
    let (n, l) = (env.n, env.l);
    let lf = l as f64;
    let inv_sqrt_l = 1.0 / lf.sqrt();
    let pot_scale = lf.powf(-0.25);
    let lap = laplacian(u, n, l);
    let mut energy = 0.0;
    let mut grad = vec![0.0; u.len()];
    for k in 0..u.len() {
        energy += 0.5 * inv_sqrt_l * (params.mu * u[k] * u[k] - params.t * lap[k] * u[k]);
        grad[k] = inv_sqrt_l * (params.mu * u[k] - params.t * lap[k]);
    }
    for x in 0..l {
        let (v, g) = (&u[x * n..(x + 1) * n], &mut grad[x * n..(x + 1) * n]);
        energy += pot_scale * env.potential_and_gradient(x, v, pot_scale, g);
    }
    Ok((energy, grad))
}

/// Dense symmetric circulant `L × L` matrix `(1/L)Σ_k f(λ_k) cos(2πk(x − y)/L)`
/// with `λ_k = μ + 4tL sin²(πk/L)`.
fn circulant_function(params: &ModelParams, l: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let lf = l as f64;
    let vals: Vec<f64> =
        (0..l).map(|k| f(params.mu + 4.0 * params.t * lf * (PI * k as f64 / lf).sin().powi(2))).collect();
    let row: Vec<f64> =
        (0..l).map(|d| (0..l).map(|k| vals[k] * (2.0 * PI * (k * d) as f64 / lf).cos()).sum::<f64>() / lf).collect();
    let mut m = vec![0.0; l * l];
    for x in 0..l {
        for y in 0..l {
            m[x * l + y] = row[(x + l - y) % l];
        }
    }
    m
}

/// Applies an `L × L` site matrix to every coordinate of `v`.
fn apply_sites(m: &[f64], v: &[f64], n: usize, l: usize) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for x in 0..l {
        for y in 0..l {
            let c = m[x * l + y];
            if c == 0.0 {
                continue;
            }
            for i in 0..n {
                out[x * n + i] += c * v[y * n + i];
            }
        }
    }
    out
}

/// Sampler settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Number of replicas sharing the environment (two for overlaps).
    pub n_replicas: usize,
    /// Total number of MALA steps per replica, burn-in included.
    pub n_steps: usize,
    /// Initial step size `h` (in units of the preconditioner).
    pub step_size: f64,
    /// Fraction of steps used for burn-in and step-size tuning.
    pub burn_in_fraction: f64,
    /// Number of batches for batch-means error bars.
    pub n_batches: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            n_replicas: 2,
            n_steps: 20_000,
            step_size: 0.5,
            burn_in_fraction: BURN_IN_FRACTION,
            n_batches: N_BATCHES,
        }
    }
}

/// State of one replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    /// Configuration `u`, `L × N` row-major.
    pub u: Vec<f64>,
    /// Replica index.
    pub replica: usize,
    /// Current step size.
    pub step_size: f64,
    /// Accepted proposals after burn-in.
    pub accepted: usize,
    /// Proposals after burn-in.
    pub proposed: usize,
}

impl ChainState {
    /// Acceptance rate after burn-in.
    pub fn acceptance(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Post-burn-in time series of one disorder realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRun {
    /// Lattice size `L`.
    pub l: usize,
    /// Final replica states.
    pub states: Vec<ChainState>,
    /// `‖u(x)‖²_N` per step and site (`steps × L`), averaged over replicas.
    pub radius: Vec<f64>,
    /// `(u(x), u′(x))_N` of replicas 0 and 1 per step and site (`steps × L`).
    pub overlap: Vec<f64>,
    /// `‖u(x + s) − u(x)‖²_N` averaged over `x` and replicas, per step and
    /// separation `s ∈ {0, …, L − 1}` (`steps × L`).
    pub msd: Vec<f64>,
    /// Number of recorded steps.
    pub n_samples: usize,
    /// Number of batches for error bars.
    pub n_batches: usize,
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Sample mean.
    pub mean: f64,
    /// Standard error.
    pub stderr: f64,
}

impl Estimate {
    /// `|mean − target| / stderr` (infinite when the error bar vanishes
    /// and the values differ).
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

/// Batch-means estimate of the mean of a stationary series.
pub fn batch_means(series: &[f64], n_batches: usize) -> Estimate {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n.max(1) as f64;
    let nb = n_batches.min(n).max(1);
    let size = n / nb;
    if nb < 2 || size == 0 {
        return Estimate { mean, stderr: f64::INFINITY };
    }
    let means: Vec<f64> = (0..nb).map(|b| series[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let bm = means.iter().sum::<f64>() / nb as f64;
    let var = means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (nb - 1) as f64;
    Estimate { mean, stderr: (var / nb as f64).sqrt() }
}

fn site_average(series: &[f64], l: usize) -> Vec<f64> {
    series.chunks(l).map(|c| c.iter().sum::<f64>() / l as f64).collect()
}

impl ChainRun {
    /// Site-averaged radius `L⁻¹Σ_x ‖u(x)‖²_N`.
    pub fn radius_estimate(&self) -> Estimate {
        batch_means(&site_average(&self.radius, self.l), self.n_batches)
    }

    /// Site-averaged overlap of replicas 0 and 1, if there are two replicas.
    pub fn overlap_estimate(&self) -> Option<Estimate> {
        (!self.overlap.is_empty()).then(|| batch_means(&self.overlap_series(), self.n_batches))
    }

    /// Site-averaged overlap series.
    pub fn overlap_series(&self) -> Vec<f64> {
        site_average(&self.overlap, self.l)
    }

    /// Radius at one site.
    pub fn site_radius(&self, x: usize) -> Estimate {
        let s: Vec<f64> = self.radius.iter().skip(x % self.l).step_by(self.l).copied().collect();
        batch_means(&s, self.n_batches)
    }
}

/// `𝔼⟨‖u(x) − u(y)‖²_N⟩` for one realization (time and site average over
/// pairs with separation `y − x mod L`).
pub fn estimate_msd(run: &ChainRun, x: usize, y: usize) -> Estimate {
    let l = run.l;
    let s = (y + l - x % l) % l;
    if s == 0 {
        return Estimate { mean: 0.0, stderr: 0.0 };
    }
    let series: Vec<f64> = run.msd.iter().skip(s).step_by(l).copied().collect();
    batch_means(&series, run.n_batches)
}

/// Runs `config.n_replicas` independent MALA chains in the shared environment.
///
/// Each replica starts from an exact draw of the disorder-free Gaussian
/// measure and proposes
/// `u′ = u − (h/2)P∇(βℋ)(u) + √h P^{1/2}ξ`, `P = L^{1/2}(μ − tΔ_L)^{−1}/β`.
/// During burn-in `ln h` is moved by `3(rate − 0.55)/√k` after the `k`-th
/// window of 50 steps (a Robbins–Monro schedule aimed inside
/// [`ACCEPTANCE_WINDOW`]); the step size is frozen afterwards. Noise
/// for site `x` of replica `r` comes from the stream `(seed, draw, r, x)`.
pub fn run_chains(
    params: &ModelParams,
    env: &EnvironmentRealization,
    config: &ChainConfig,
    seed: u64,
) -> Result<ChainRun> {
    params.validate()?;
    ensure_domain(config.step_size > 0.0, || "step size must be positive".into())?;
    ensure_domain(config.n_replicas >= 1, || "need at least one replica".into())?;
    ensure_domain(config.n_steps >= 10, || "need at least 10 steps".into())?;
    let (n, l) = (env.n, env.l);
    let beta = params.beta;
    let sqrt_l = (l as f64).sqrt();
    let p = circulant_function(params, l, |lam| sqrt_l / (beta * lam));
    let p_half = circulant_function(params, l, |lam| (sqrt_l / (beta * lam)).sqrt());
    let p_inv = circulant_function(params, l, |lam| beta * lam / sqrt_l);
    let burn = ((config.n_steps as f64) * config.burn_in_fraction).round() as usize;
    let kept = config.n_steps - burn;

    let run_replica = |r: usize| -> Result<(ChainState, Vec<Vec<f64>>)> {
        let stream = |x: usize| (env.draw << 40) | ((r as u64) << 24) | x as u64;
        let mut site_rngs: Vec<ChaCha8Rng> = (0..=l).map(|x| keyed_rng(seed, CHAIN_TAG, stream(x))).collect();
        let normals = |rngs: &mut [ChaCha8Rng]| -> Vec<f64> {
            let mut xi = vec![0.0; n * l];
            for x in 0..l {
                for i in 0..n {
                    xi[x * n + i] = rngs[x].sample(StandardNormal);
                }
            }
            apply_sites(&p_half, &xi, n, l)
        };
        let mut u = normals(&mut site_rngs);
        let (mut e, g) = energy_and_gradient(&u, env, params)?;
        let mut drift = apply_sites(&p, &g, n, l);
        let mut h = config.step_size;
        let mut state = ChainState { u: Vec::new(), replica: r, step_size: h, accepted: 0, proposed: 0 };
        let mut window_acc = 0usize;
        let mut tune_round = 0usize;
        let mut trace = Vec::with_capacity(kept);
        for step in 0..config.n_steps {
            let noise = normals(&mut site_rngs);
            let prop: Vec<f64> = (0..u.len()).map(|k| u[k] - 0.5 * h * beta * drift[k] + h.sqrt() * noise[k]).collect();
            let (e_new, g_new) = energy_and_gradient(&prop, env, params)?;
            let mut accepted = false;
            if e_new.is_finite() {
                let drift_new = apply_sites(&p, &g_new, n, l);
                // log q(u | u′) − log q(u′ | u) with metric P⁻¹.
                let fwd: Vec<f64> = (0..u.len()).map(|k| prop[k] - u[k] + 0.5 * h * beta * drift[k]).collect();
                let bwd: Vec<f64> = (0..u.len()).map(|k| u[k] - prop[k] + 0.5 * h * beta * drift_new[k]).collect();
                let quad = |v: &[f64]| dot(v, &apply_sites(&p_inv, v, n, l)) / (2.0 * h);
                let log_ratio = -beta * (e_new - e) - quad(&bwd) + quad(&fwd);
                let uniform: f64 = site_rngs[l].gen();
                if log_ratio >= 0.0 || uniform.ln() < log_ratio {
                    u = prop;
                    e = e_new;
                    drift = drift_new;
                    accepted = true;
                }
            }
            if !e.is_finite() || u.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonConvergence {
                    what: format!("chain energy diverged at step {step} (replica {r}, h = {h})"),
                    residual: e,
                });
            }
            if step < burn {
                window_acc += accepted as usize;
                if (step + 1) % TUNE_INTERVAL == 0 {
                    let rate = window_acc as f64 / TUNE_INTERVAL as f64;
                    tune_round += 1;
                    h *= (3.0 * (rate - TARGET_ACCEPTANCE) / (tune_round as f64).sqrt()).exp();
                    window_acc = 0;
                }
            } else {
                state.proposed += 1;
                state.accepted += accepted as usize;
                trace.push(u.clone());
            }
        }
        state.u = u;
        state.step_size = h;
        Ok((state, trace))
    };

    let results: Vec<Result<(ChainState, Vec<Vec<f64>>)>> =
        (0..config.n_replicas).into_par_iter().map(run_replica).collect();
    let mut states = Vec::new();
    let mut traces = Vec::new();
    for r in results {
        let (s, t) = r?;
        states.push(s);
        traces.push(t);
    }
    let nf = n as f64;
    let reps = traces.len() as f64;
    let mut radius = vec![0.0; kept * l];
    let mut msd = vec![0.0; kept * l];
    let mut overlap = Vec::new();
    for (step, rad_row) in radius.chunks_mut(l).enumerate() {
        let msd_row = &mut msd[step * l..(step + 1) * l];
        for tr in &traces {
            let u = &tr[step];
            for x in 0..l {
                let ux = &u[x * n..(x + 1) * n];
                rad_row[x] += dot(ux, ux) / nf / reps;
                for (s, m) in msd_row.iter_mut().enumerate() {
                    let uy = &u[((x + s) % l) * n..((x + s) % l + 1) * n];
                    let d: f64 = ux.iter().zip(uy).map(|(a, b)| (a - b) * (a - b)).sum();
                    *m += d / nf / reps / l as f64;
                }
            }
        }
        if traces.len() >= 2 {
            let (a, b) = (&traces[0][step], &traces[1][step]);
            for x in 0..l {
                overlap.push(dot(&a[x * n..(x + 1) * n], &b[x * n..(x + 1) * n]) / nf);
            }
        }
    }
    Ok(ChainRun { l, states, radius, overlap, msd, n_samples: kept, n_batches: config.n_batches })
}

/// A raw (unfolded) histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Left edge of the first bin.
    pub lo: f64,
    /// Right edge of the last bin.
    pub hi: f64,
    /// Bin counts.
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Histogram of `samples` with `bins` equal bins on their range.
    pub fn new(samples: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (lo.min(0.0), lo.max(0.0) + 1.0) };
        let mut counts = vec![0u64; bins];
        for &s in samples {
            let b = (((s - lo) / (hi - lo)) * bins as f64).floor() as usize;
            counts[b.min(bins - 1)] += 1;
        }
        Histogram { lo, hi, counts }
    }

    /// Center of bin `b`.
    pub fn center(&self, b: usize) -> f64 {
        self.lo + (b as f64 + 0.5) * (self.hi - self.lo) / self.counts.len() as f64
    }

    /// Center of the most populated bin.
    pub fn mode(&self) -> f64 {
        let b = (0..self.counts.len()).max_by_key(|&b| (self.counts[b], std::cmp::Reverse(b))).unwrap_or(0);
        self.center(b)
    }

    /// True when, walking away from the mode in either direction, no bin
    /// exceeds the running minimum by more than `k` Poisson standard
    /// deviations (`k√(min + 1)`).
    pub fn is_unimodal(&self, k: f64) -> bool {
        let c = &self.counts;
        let Some(mode) = (0..c.len()).max_by_key(|&b| c[b]) else {
            return true;
        };
        let ok = |idx: &mut dyn Iterator<Item = usize>| {
            let mut run_min = c[mode] as f64;
            for b in idx {
                let v = c[b] as f64;
                if v > run_min + k * (run_min + 1.0).sqrt() {
                    return false;
                }
                run_min = run_min.min(v);
            }
            true
        };
        ok(&mut (0..mode).rev()) && ok(&mut (mode + 1..c.len()))
    }
}

/// Mode of a Gaussian kernel density estimate of `samples` with Silverman's
/// bandwidth `0.9·min(sd, IQR/1.34)·n^{−1/5}`, evaluated on a 512-point grid
/// after binning the samples into 2048 bins.
pub fn kde_mode(samples: &[f64]) -> Option<f64> {
    let n = samples.len();
    if n < 2 {
        return samples.first().copied();
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let sd = (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let iqr = sorted[(3 * n) / 4] - sorted[n / 4];
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if spread <= 0.0 {
        return Some(mean);
    }
    let bw = 0.9 * spread * (n as f64).powf(-0.2);
    let fine = Histogram::new(&sorted, 2048);
    let (lo, hi) = (sorted[0] - 3.0 * bw, sorted[n - 1] + 3.0 * bw);
    (0..512)
        .map(|i| lo + (hi - lo) * i as f64 / 511.0)
        .map(|g| {
            let dens: f64 = fine
                .counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(b, &c)| c as f64 * (-0.5 * ((g - fine.center(b)) / bw).powi(2)).exp())
                .sum();
            (g, dens)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(g, _)| g)
}

/// A full disorder-averaged simulation request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Covariance of the potential.
    pub correlator: Correlator,
    /// `β, μ, t`.
    pub params: ModelParams,
    /// Dimension `N`.
    pub n: usize,
    /// Lattice size `L`.
    pub l: usize,
    /// Random features per atom `M`.
    pub n_features: usize,
    /// Number of disorder realizations.
    pub n_disorder: usize,
    /// Sampler settings.
    pub chain: ChainConfig,
    /// Master seed.
    pub seed: u64,
    /// Bins of the pooled overlap histogram.
    pub histogram_bins: usize,
}

/// Per-realization results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawSummary {
    /// Disorder-draw index.
    pub draw: u64,
    /// Site-averaged radius.
    pub radius: Estimate,
    /// Site-averaged overlap of replicas 0 and 1.
    pub overlap: Option<Estimate>,
    /// Post-burn-in acceptance rate per replica.
    pub acceptance: Vec<f64>,
    /// Frozen step size per replica.
    pub step_size: Vec<f64>,
}

/// Disorder-averaged results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    /// Radius `L⁻¹Σ_x 𝔼⟨‖u(x)‖²_N⟩`.
    pub radius: Estimate,
    /// Overlap `L⁻¹Σ_x 𝔼⟨(u(x), u′(x))_N⟩`.
    pub overlap: Option<Estimate>,
    /// MSD by separation `s = 0, …, L − 1`.
    pub msd: Vec<Estimate>,
    /// Pooled histogram of the site-averaged overlap (raw, negative samples kept).
    pub overlap_histogram: Option<Histogram>,
    /// Kernel-density mode of the pooled overlap samples.
    pub overlap_mode: Option<f64>,
    /// Results of every realization.
    pub draws: Vec<DrawSummary>,
}

/// Combines per-realization estimates: the mean of the means, with standard
/// error `max(√(Σσᵢ²)/n, sd(means)/√n)` (the second term only for `n ≥ 2`).
pub fn combine(estimates: &[Estimate]) -> Estimate {
    let n = estimates.len() as f64;
    let mean = estimates.iter().map(|e| e.mean).sum::<f64>() / n;
    let within = estimates.iter().map(|e| e.stderr * e.stderr).sum::<f64>().sqrt() / n;
    let between = if estimates.len() >= 2 {
        (estimates.iter().map(|e| (e.mean - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Estimate { mean, stderr: within.max(between) }
}

/// Samples `n_disorder` environments and runs the chains of each in
/// parallel, returning the disorder-averaged statistics and the time series
/// of every realization.
pub fn simulate(config: &SimulationConfig) -> Result<(SimulationSummary, Vec<ChainRun>)> {
    ensure_domain(config.n_disorder >= 1, || "need at least one disorder draw".into())?;
    let params = config.params.clone().with_lattice(config.l)?;
    let runs: Vec<Result<ChainRun>> = (0..config.n_disorder as u64)
        .into_par_iter()
        .map(|d| {
            let env =
                sample_environment_draw(&config.correlator, config.n, config.l, config.n_features, config.seed, d)?;
            run_chains(&params, &env, &config.chain, config.seed)
        })
        .collect();
    let runs: Vec<ChainRun> = runs.into_iter().collect::<Result<_>>()?;
    let draws: Vec<DrawSummary> = runs
        .iter()
        .enumerate()
        .map(|(d, r)| DrawSummary {
            draw: d as u64,
            radius: r.radius_estimate(),
            overlap: r.overlap_estimate(),
            acceptance: r.states.iter().map(ChainState::acceptance).collect(),
            step_size: r.states.iter().map(|s| s.step_size).collect(),
        })
        .collect();
    let radius = combine(&draws.iter().map(|d| d.radius).collect::<Vec<_>>());
    let overlaps: Option<Vec<Estimate>> = draws.iter().map(|d| d.overlap).collect();
    let overlap = overlaps.map(|o| combine(&o));
    let msd = (0..config.l).map(|s| combine(&runs.iter().map(|r| estimate_msd(r, 0, s)).collect::<Vec<_>>())).collect();
    let pooled: Vec<f64> = runs.iter().flat_map(|r| r.overlap_series()).collect();
    let overlap_histogram = (!pooled.is_empty()).then(|| Histogram::new(&pooled, config.histogram_bins));
    let overlap_mode = kde_mode(&pooled);
    Ok((SimulationSummary { radius, overlap, msd, overlap_histogram, overlap_mode, draws }, runs))
}
