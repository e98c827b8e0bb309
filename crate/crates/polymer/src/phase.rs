//! Phase classification and closed-form solvers for the Parisi pair.
//!
//! * Replica symmetry is decided by the test function
//!   `g(s) = β²B(2s/β) − 1/(st) − s(2βB′(2/(β√(μt))) + μ)` on `(0, s̄]`,
//!   `s̄ = 1/√(μt)`: the model is RS iff `g` attains its supremum at `s̄`.
//! * The Larkin mass is the largest root of `B″(2/(β√(μt))) · 2/√(μ³t) = 1`.
//! * Outside the RS region the shape of `U_B` selects between a two-atom
//!   (one-step) measure, found by damped Newton iteration, and a measure with
//!   an absolutely continuous part whose CDF is `β⁻¹U_B′(q_c − s)`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlator::{Correlator, UbShape};
use crate::error::{ensure_domain, Error, Result};
use crate::kernels::ResolventKernel;
use crate::model::{CdfFormula, ModelParams, ParisiMeasure, Phase, RsbSolution};
use crate::numerics::{bisect, bisect_log, golden_max, log_grid};
use crate::parisi::{eval_functional, stationarity_residuals, stationarity_residuals_on};

/// Relative tolerance of the RS decision.
pub const RS_TOLERANCE: f64 = 1e-9;
/// Points of the logarithmic grid used to search for the maximum of `g`.
pub const RS_GRID_POINTS: usize = 1000;
/// Lower end of the RS search grid, relative to `s̄`.
pub const RS_GRID_FLOOR: f64 = 1e-12;
/// Search domain of the Larkin mass.
pub const LARKIN_MU_RANGE: (f64, f64) = (1e-16, 1e8);
/// Grid density (points per decade) of the Larkin-mass scan.
pub const LARKIN_POINTS_PER_DECADE: usize = 64;
/// Relative width at which boundary bisections stop.
pub const BOUNDARY_REL_WIDTH: f64 = 1e-6;
/// Residual norm required of the one-step Newton solve.
pub const ONE_RSB_TOLERANCE: f64 = 1e-10;
/// Stationarity tolerance required of the assembled FRSB pair.
pub const FRSB_TOLERANCE: f64 = 1e-8;

/// `s̄ = 1/√(μt)`.
pub fn s_bar(params: &ModelParams) -> f64 {
    params.s_bar()
}

/// The RS test function `g(s) = β²B(2s/β) − 1/(st) − s(2βB′(2s̄/β) + μ)`.
pub fn g_function(params: &ModelParams, corr: &Correlator, s: f64) -> Result<f64> {
    ensure_domain(s > 0.0 && s.is_finite(), || format!("g evaluated at s = {s} <= 0"))?;
    Ok(g_unchecked(params, corr, s, slope_term(params, corr)))
}

fn slope_term(params: &ModelParams, corr: &Correlator) -> f64 {
    2.0 * params.beta * corr.b1(2.0 * params.s_bar() / params.beta) + params.mu
}

fn g_unchecked(params: &ModelParams, corr: &Correlator, s: f64, slope: f64) -> f64 {
    let b = params.beta;
    b * b * corr.b(2.0 * s / b) - 1.0 / (s * params.t) - s * slope
}

/// `g″(s) = 4B″(2s/β) − 2/(s³t)`; at `s̄` this is `4B″(2s̄/β) − 2√(μ³t³)/t`.
pub fn g_second_derivative(params: &ModelParams, corr: &Correlator, s: f64) -> f64 {
    4.0 * corr.b2(2.0 * s / params.beta) - 2.0 / (s * s * s * params.t)
}

/// Larkin defect `B″(2/(β√(μt))) · 2/√(μ³t) − 1`; negative above the Larkin mass.
pub fn larkin_defect(beta: f64, t: f64, corr: &Correlator, mu: f64) -> f64 {
    corr.b2(2.0 / (beta * (mu * t).sqrt())) * 2.0 / (mu * mu * mu * t).sqrt() - 1.0
}

/// The location and value of the supremum of `g` over `(0, s̄]`, found on a
/// [`RS_GRID_POINTS`]-point log grid with golden-section refinement around
/// every interior local maximum.
pub fn g_supremum(params: &ModelParams, corr: &Correlator) -> (f64, f64) {
    let sb = params.s_bar();
    let slope = slope_term(params, corr);
    let g = |s: f64| g_unchecked(params, corr, s, slope);
    let grid = log_grid(sb * RS_GRID_FLOOR, sb, RS_GRID_POINTS);
    let vals: Vec<f64> = grid.iter().map(|&s| g(s)).collect();
    let mut best = (sb, g(sb));
    for i in 1..grid.len() - 1 {
        if vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1] {
            let (x, fx) = golden_max(g, grid[i - 1], grid[i + 1], 1e-14);
            if fx > best.1 {
                best = (x, fx);
            }
        }
    }
    best
}

/// True iff `sup_{0<s≤s̄} g(s) = g(s̄)`.
///
/// The supremum is located numerically (see [`g_supremum`]) and compared
/// with `g(s̄)` at relative tolerance [`RS_TOLERANCE`]. Because `g′(s̄) = 0`,
/// `s̄` cannot be the maximizer when `g″(s̄) > 0`; that exact local test is
/// applied first so that the decision is sharp at the Larkin mass.
pub fn is_rs(params: &ModelParams, corr: &Correlator) -> bool {
    let sb = params.s_bar();
    if g_second_derivative(params, corr, sb) > 0.0 {
        return false;
    }
    let g_end = g_unchecked(params, corr, sb, slope_term(params, corr));
    let (_, sup) = g_supremum(params, corr);
    sup <= g_end + RS_TOLERANCE * g_end.abs().max(1.0)
}

/// The Larkin mass `μ_Lar(β; t)`: the largest root of the Larkin equation in
/// [`LARKIN_MU_RANGE`], or `None` if the defect never changes sign.
///
/// The scan runs from the top of a log grid of
/// [`LARKIN_POINTS_PER_DECADE`] points per decade; power laws, whose defect
/// is monotone in `μ`, are bisected directly on the whole range.
pub fn larkin_mass(beta: f64, t: f64, corr: &Correlator) -> Option<f64> {
    let h = |mu: f64| larkin_defect(beta, t, corr, mu);
    let (lo, hi) = LARKIN_MU_RANGE;
    if matches!(corr, Correlator::PowerLaw { .. }) {
        return if h(lo) > 0.0 && h(hi) < 0.0 { bisect_log(h, lo, hi, 1e-13, 400).ok() } else { None };
    }
    let decades = (hi / lo).log10();
    let n = (decades * LARKIN_POINTS_PER_DECADE as f64).round() as usize + 1;
    let grid = log_grid(lo, hi, n);
    let mut upper = h(grid[n - 1]);
    for i in (0..n - 1).rev() {
        let lower = h(grid[i]);
        if lower.signum() != upper.signum() && lower > 0.0 {
            return bisect_log(h, grid[i], grid[i + 1], 1e-13, 400).ok();
        }
        upper = lower;
    }
    None
}

/// `sup_{s>0} s t β² B(2s/β) − 1`; the massless model is RS iff this is `≤ 0`.
///
/// (With `μ → 0` the test function tends to `β²B(2s/β) − 1/(st)`, whose
/// supremum is nonpositive exactly when `s t β² B(2s/β) ≤ 1` for all `s`.)
pub fn massless_defect(beta: f64, t: f64, corr: &Correlator) -> f64 {
    let h = |s: f64| s * t * beta * beta * corr.b(2.0 * s / beta);
    let grid = log_grid(1e-10 * beta, 1e10 * beta, 2001);
    let vals: Vec<f64> = grid.iter().map(|&s| h(s)).collect();
    let mut best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for i in 1..grid.len() - 1 {
        if vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1] {
            best = best.max(golden_max(h, grid[i - 1], grid[i + 1], 1e-14).1);
        }
    }
    best - 1.0
}

/// The inverse temperature at which the massless model leaves the RS phase,
/// or `None` when it is RSB at every temperature
/// ([`Correlator::massless_rsb_criterion`]) or RS at every temperature.
pub fn massless_transition_beta(t: f64, corr: &Correlator) -> Option<f64> {
    if corr.massless_rsb_criterion() || corr.is_zero() {
        return None;
    }
    let psi = |b: f64| massless_defect(b, t, corr);
    let (mut lo, mut hi) = (1e-2, 1e2);
    for _ in 0..20 {
        if psi(lo) < 0.0 {
            break;
        }
        lo *= 1e-2;
    }
    for _ in 0..20 {
        if psi(hi) > 0.0 {
            break;
        }
        hi *= 1e2;
    }
    bisect_log(psi, lo, hi, 1e-12, 400).ok()
}

/// The lower bound `min(U(4B″(0)), μ/(4B″(0)), R₁(μ))` on `β(q − q_*)` at the
/// Parisi pair.
pub fn gap_lower_bound(kernel: &ResolventKernel, params: &ModelParams, corr: &Correlator) -> Result<f64> {
    let b2 = corr.b2(0.0);
    let r1 = kernel.r1(params.mu);
    if b2 <= 0.0 {
        return Ok(r1);
    }
    Ok(kernel.u_inv(4.0 * b2)?.min(params.mu / (4.0 * b2)).min(r1))
}

fn base_extras(params: &ModelParams, corr: &Correlator) -> BTreeMap<String, f64> {
    let mut extras = BTreeMap::new();
    if let Some(m) = larkin_mass(params.beta, params.t, corr) {
        extras.insert("mu_larkin".to_string(), m);
    }
    extras
}

/// The replica-symmetric pair `q_* = −B′(2/(β√(μt)))/√(μ³t)`,
/// `q_c = q_* + 1/(β√(μt))`, `ζ_c = δ_{q_*}`. Refuses non-RS points.
pub fn solve_rs(params: &ModelParams, corr: &Correlator) -> Result<RsbSolution> {
    if !is_rs(params, corr) {
        return Err(Error::Precondition(format!(
            "RS test sup g = g(1/sqrt(mu t)) fails at beta = {}, mu = {}, t = {}",
            params.beta, params.mu, params.t
        )));
    }
    let kernel = ResolventKernel::continuum(params.t)?;
    let mut sol = solve_rs_with_kernel(&kernel, params, corr, crate::parisi::RESIDUAL_GRID_POINTS)?;
    sol.extras.extend(base_extras(params, corr));
    Ok(sol)
}

/// The Dirac solution of the stationarity system for any kernel:
/// `β(q − q_*) = R₁(μ)` and `F(q_*) = 0`, i.e.
/// `q_* = −2B′(2R₁(μ)/β) R₂(μ)`. With a lattice kernel this is the finite-`L`
/// pair `(q_L, δ_{q_{L,*}})`. Residuals are evaluated on `grid` points.
pub fn solve_rs_with_kernel(
    kernel: &ResolventKernel,
    params: &ModelParams,
    corr: &Correlator,
    grid: usize,
) -> Result<RsbSolution> {
    let beta = params.beta;
    let r1 = kernel.r1(params.mu);
    let gap = r1 / beta;
    let q_star = -2.0 * corr.b1(2.0 * gap) * kernel.r2(params.mu);
    let q_c = q_star + gap;
    let measure = ParisiMeasure::dirac(q_c, q_star)?;
    let residuals = stationarity_residuals_on(kernel, params, corr, &measure, grid)?;
    let free_energy = eval_functional(kernel, params, corr, &measure)?;
    let mut extras = BTreeMap::new();
    extras.insert("q_star".to_string(), q_star);
    Ok(RsbSolution { phase: Phase::Rs, q_c, measure, extras, alternatives: BTreeMap::new(), free_energy, residuals })
}

/// Residuals `(R₁, R₂, R₃) = (F(q₀), F(q_*), ∫_{q₀}^{q_*}F)` of the one-step
/// system in the unknowns `(q₀, D = q_* − q₀, m)`, with `q_c` eliminated by the
/// Larkin condition `β(q_c − q_* + mD) = 1/√(μt)`.
#[derive(Debug, Clone, Copy)]
struct OneStep<'a> {
    corr: &'a Correlator,
    beta: f64,
    mu: f64,
    t: f64,
}

impl OneStep<'_> {
    fn a(&self) -> f64 {
        1.0 / (self.mu * self.t).sqrt()
    }

    fn s(&self) -> f64 {
        (self.mu * self.mu * self.mu * self.t).sqrt()
    }

    /// `(gap, E) = (q_c − q_*, q_c − q₀)`.
    fn gaps(&self, d: f64, m: f64) -> (f64, f64) {
        let gap = self.a() / self.beta - m * d;
        (gap, gap + d)
    }

    fn admissible(&self, x: [f64; 3]) -> bool {
        let [q0, d, m] = x;
        let (gap, _) = self.gaps(d, m);
        q0 >= 0.0 && d > 0.0 && m > 0.0 && m <= 1.0 && gap > 0.0 && x.iter().all(|v| v.is_finite())
    }

    fn residual(&self, x: [f64; 3]) -> [f64; 3] {
        let [q0, d, m] = x;
        let (b, t, mu) = (self.beta, self.t, self.mu);
        let (a, s) = (self.a(), self.s());
        let (gap, e) = self.gaps(d, m);
        let c = self.corr;
        let r1 = -2.0 * c.b1(2.0 * e) - 2.0 * q0 * s;
        let r2 = -2.0 * c.b1(2.0 * gap) - 2.0 * q0 * s - 1.0 / (b * b * b * m * t * gap * gap) + mu / (b * m);
        let r3 = c.b(2.0 * gap)
            - c.b(2.0 * e)
            - (2.0 * q0 * s - mu / (b * m)) * d
            - (1.0 / (b * b * m * m * t)) * (1.0 / (b * gap) - 1.0 / a);
        [r1, r2, r3]
    }

    fn jacobian(&self, x: [f64; 3]) -> [[f64; 3]; 3] {
        let [q0, d, m] = x;
        let (b, t, mu) = (self.beta, self.t, self.mu);
        let (a, s) = (self.a(), self.s());
        let (gap, e) = self.gaps(d, m);
        let c = self.corr;
        let b3t = b * b * b * t;
        let (b1g, b2g) = (c.b1(2.0 * gap), c.b2(2.0 * gap));
        let (b1e, b2e) = (c.b1(2.0 * e), c.b2(2.0 * e));
        [
            [-2.0 * s, -4.0 * b2e * (1.0 - m), 4.0 * d * b2e],
            [
                -2.0 * s,
                4.0 * m * b2g - 2.0 / (b3t * gap.powi(3)),
                4.0 * d * b2g + 1.0 / (b3t * m * m * gap * gap) - 2.0 * d / (b3t * m * gap.powi(3)) - mu / (b * m * m),
            ],
            [
                -2.0 * s * d,
                -2.0 * m * b1g - 2.0 * (1.0 - m) * b1e - 2.0 * q0 * s + mu / (b * m) - 1.0 / (b3t * m * gap * gap),
                -2.0 * d * b1g + 2.0 * d * b1e - mu * d / (b * m * m)
                    + (2.0 / (b * b * m * m * m * t)) * (1.0 / (b * gap) - 1.0 / a)
                    - d / (b3t * m * m * gap * gap),
            ],
        ]
    }

    /// Damped Newton iteration from `x`; returns the final point and its
    /// residual norm.
    fn newton(&self, mut x: [f64; 3]) -> ([f64; 3], f64) {
        let norm = |r: [f64; 3]| r.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let mut res = norm(self.residual(x));
        for _ in 0..200 {
            if res <= ONE_RSB_TOLERANCE * 1e-3 {
                break;
            }
            let r = self.residual(x);
            let Some(step) = solve3(self.jacobian(x), r) else {
                break;
            };
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial = [x[0] - lambda * step[0], x[1] - lambda * step[1], x[2] - lambda * step[2]];
                if self.admissible(trial) {
                    let tr = norm(self.residual(trial));
                    if tr < res {
                        x = trial;
                        res = tr;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (x, res)
    }
}

/// Gaussian elimination with partial pivoting for `J Δ = r`.
fn solve3(mut j: [[f64; 3]; 3], mut r: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| j[a][col].abs().total_cmp(&j[b][col].abs()))?;
        if j[piv][col] == 0.0 || !j[piv][col].is_finite() {
            return None;
        }
        j.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..3 {
            let f = j[row][col] / j[col][col];
            for k in col..3 {
                j[row][k] -= f * j[col][k];
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = r[row];
        for k in row + 1..3 {
            acc -= j[row][k] * x[k];
        }
        x[row] = acc / j[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Grid of `m` values on which the bracketed one-step search looks for sign changes.
pub const ONE_RSB_M_GRID: usize = 64;

impl OneStep<'_> {
    /// The point `(q₀, D, m)` with `D = θ(1/(β√(μt)))/m` and `q₀` eliminated
    /// through `R₁ = 0`, i.e. `q₀ = −B′(2E)/√(μ³t)`.
    fn reduced_point(&self, m: f64, theta: f64) -> [f64; 3] {
        let d = theta * self.a() / self.beta / m;
        let (_, e) = self.gaps(d, m);
        [-self.corr.b1(2.0 * e) / self.s(), d, m]
    }

    /// The largest `θ ∈ (0, 1)` with `R₂ = 0` on the reduced point, found by
    /// scanning down from `θ → 1` (where `R₂ → −∞`) and bisecting.
    fn theta_root(&self, m: f64) -> Option<f64> {
        let r2 = |th: f64| self.residual(self.reduced_point(m, th))[1];
        let mut grid: Vec<f64> = (1..=8).rev().map(|k| 1.0 - 10f64.powi(-k)).collect();
        grid.extend((1..90).rev().map(|j| j as f64 / 100.0));
        grid.extend((1..=6).map(|k| 10f64.powi(-2 - k)));
        let mut upper = grid[0];
        let mut r_upper = r2(upper);
        for &th in &grid[1..] {
            let r = r2(th);
            if r_upper < 0.0 && r > 0.0 {
                return bisect(r2, th, upper, 1e-15, 200).ok();
            }
            upper = th;
            r_upper = r;
        }
        None
    }

    /// `R₃` along the curve `R₁ = R₂ = 0`.
    fn reduced_r3(&self, m: f64) -> Option<(f64, f64)> {
        let th = self.theta_root(m)?;
        Some((self.residual(self.reduced_point(m, th))[2], th))
    }

    /// Seeds from sign changes of `R₃` along `R₁ = R₂ = 0` on a grid of `m`.
    fn bracketed_seeds(&self) -> Vec<[f64; 3]> {
        let ms: Vec<f64> = (1..=ONE_RSB_M_GRID).map(|i| i as f64 / ONE_RSB_M_GRID as f64).collect();
        let vals: Vec<Option<(f64, f64)>> = ms.iter().map(|&m| self.reduced_r3(m)).collect();
        let mut seeds = Vec::new();
        for i in 0..ms.len() - 1 {
            let (Some((a, _)), Some((b, _))) = (vals[i], vals[i + 1]) else {
                continue;
            };
            if a.signum() == b.signum() {
                continue;
            }
            let (mut lo, mut hi, mut f_lo) = (ms[i], ms[i + 1], a);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                match self.reduced_r3(mid) {
                    Some((fm, _)) if fm.signum() == f_lo.signum() => {
                        lo = mid;
                        f_lo = fm;
                    }
                    Some(_) => hi = mid,
                    None => break,
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            let m = 0.5 * (lo + hi);
            if let Some(th) = self.theta_root(m) {
                seeds.push(self.reduced_point(m, th));
            }
        }
        seeds
    }
}

/// The one-step pair `m δ_{q₀} + (1 − m) δ_{q_*}`.
///
/// Solves `F(q₀) = F(q_*) = ∫_{q₀}^{q_*} F = 0` in the unknowns
/// `(q₀, D = q_* − q₀, m)`, with `q_c` fixed by the Larkin condition. Seeds
/// come first from a bracketed search: `q₀` is eliminated through `F(q₀) = 0`,
/// `D` through the largest root of `F(q_*) = 0`, and sign changes of the
/// remaining residual are bisected on a [`ONE_RSB_M_GRID`]-point grid of `m`.
/// A fixed multistart grid of 16 points (`m ∈ {0.9, 0.6, 0.3, 0.1}` times four
/// splits `θ ∈ {0.1, 0.3, 0.6, 0.9}` of the Larkin budget `1/(β√(μt))`) serves
/// as fallback. Every seed is polished by damped Newton iteration with the
/// analytic Jacobian. The trivial root `q_* = q₀` is rejected, and the first
/// candidate whose assembled pair is stationary is returned.
pub fn solve_1rsb(params: &ModelParams, corr: &Correlator) -> Result<RsbSolution> {
    let shape = corr.ub_shape(params.t);
    if !matches!(shape, UbShape::StrictlyConvex | UbShape::Linear) {
        return Err(Error::Precondition(format!("one-step solver needs U_B convex or linear, found {shape:?}")));
    }
    if is_rs(params, corr) {
        return Err(Error::Precondition("the point is RS; use the RS solution".into()));
    }
    let sys = OneStep { corr, beta: params.beta, mu: params.mu, t: params.t };
    let kernel = ResolventKernel::continuum(params.t)?;
    let budget = sys.a() / params.beta;
    let mut seeds = sys.bracketed_seeds();
    for &m in &[0.9, 0.6, 0.3, 0.1] {
        for &theta in &[0.1, 0.3, 0.6, 0.9] {
            seeds.push(sys.reduced_point(m, theta));
        }
    }
    let mut best_res = f64::INFINITY;
    for seed in seeds {
        let (x, res) = sys.newton(seed);
        best_res = best_res.min(res);
        // `q₀ = 0` is admissible: for fast-decaying `B` at tiny mass the
        // true `q₀ ∝ −B′(2(q_c − q₀))` underflows.
        if res > ONE_RSB_TOLERANCE || x[1] <= 1e-9 * budget || x[0] < 0.0 {
            continue;
        }
        let [q0, d, m] = x;
        let (gap, _) = sys.gaps(d, m);
        let q_star = q0 + d;
        let q_c = q_star + gap;
        let measure = ParisiMeasure::two_point(q_c, q0, q_star, m)?;
        let residuals = stationarity_residuals(&kernel, params, corr, &measure)?;
        if !residuals.is_stationary(1e-8) {
            continue;
        }
        let free_energy = eval_functional(&kernel, params, corr, &measure)?;
        let mut extras = base_extras(params, corr);
        extras.insert("q_0".into(), q0);
        extras.insert("q_star".into(), q_star);
        extras.insert("m".into(), m);
        let mut alternatives = BTreeMap::new();
        alternatives.insert("newton_residual".into(), res);
        return Ok(RsbSolution { phase: Phase::OneRsb, q_c, measure, extras, alternatives, free_energy, residuals });
    }
    Err(Error::NonConvergence {
        what: "one-step equations F(q0) = F(q*) = int F = 0 (bracketed seeds and 16 fixed starts)".into(),
        residual: best_res,
    })
}

/// Candidate values of `q₀` at an FRSB point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrsbTriple {
    /// `q_c − q_*`, from the Larkin mass.
    pub gap: f64,
    /// `q_c − q₀`, the root of `2B″(2(q_c − q₀)) = √(μ³t)`.
    pub spread: f64,
    /// `q₀` from the stationarity equation `−B′(2(q_c − q₀)) = q₀√(μ³t)`.
    pub q0: f64,
    /// `q₀` from the printed variant `−B′(2(q_c − q₀)) = q₀/(μ³t)`.
    pub q0_printed: f64,
    /// The Larkin mass used for `gap`.
    pub mu_larkin: f64,
}

/// Solves the triple `(q_c − q_*, q_c − q₀, q₀)` of an FRSB point.
pub fn frsb_triple(params: &ModelParams, corr: &Correlator) -> Result<FrsbTriple> {
    let (beta, mu, t) = (params.beta, params.mu, params.t);
    let mu_lar = larkin_mass(beta, t, corr)
        .ok_or_else(|| Error::Precondition("no Larkin mass: the model is RS at every mass".into()))?;
    ensure_precondition(mu < mu_lar, || format!("mu = {mu} is not below the Larkin mass {mu_lar}"))?;
    let gap = 1.0 / (beta * (mu_lar * t).sqrt());
    let s = (mu * mu * mu * t).sqrt();
    // 2B″(2E) = S with B″ decreasing; E > gap because S < S_Lar.
    let h = |e: f64| 2.0 * corr.b2(2.0 * e) - s;
    let mut hi = 2.0 * gap.max(1.0);
    while h(hi) > 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Internal("no root of 2B''(2E) = sqrt(mu^3 t)".into()));
        }
    }
    let spread = bisect(h, gap, hi, 1e-15, 400)?;
    let b1 = corr.b1(2.0 * spread);
    Ok(FrsbTriple { gap, spread, q0: -b1 / s, q0_printed: -b1 * mu * mu * mu * t, mu_larkin: mu_lar })
}

fn ensure_precondition(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Precondition(msg()))
    }
}

/// The FRSB pair: CDF `0` on `[0, q₀)`, `β⁻¹U_B′(q_c − s)` on `[q₀, q_*)` and
/// `1` on `[q_*, q_c]`.
///
/// `q₀` is taken from the stationarity equation `F(q₀) = 0`. The printed
/// variant `−B′(2(q_c − q₀)) = q₀/(μ³t)` and, for power laws, both closed
/// forms are reported in `alternatives` together with the stationarity
/// defect of the printed candidate.
pub fn solve_frsb(params: &ModelParams, corr: &Correlator) -> Result<RsbSolution> {
    let shape = corr.ub_shape(params.t);
    ensure_precondition(shape == UbShape::StrictlyConcave, || {
        format!("FRSB solver needs U_B strictly concave, found {shape:?}")
    })?;
    let tri = frsb_triple(params, corr)?;
    let (beta, mu, t) = (params.beta, params.mu, params.t);
    let q0 = tri.q0;
    let q_c = q0 + tri.spread;
    let q_star = q_c - tri.gap;
    let formula = match corr {
        Correlator::PowerLaw { g, a, gamma } => CdfFormula::FrsbPowerLaw { beta, t, g: *g, a: *a, gamma: *gamma, q_c },
        _ => CdfFormula::FrsbGeneral { beta, t, q_c, correlator: corr.clone() },
    };
    let measure = ParisiMeasure::with_formula(q_c, q0, q_star, formula)?;
    let kernel = ResolventKernel::continuum(t)?;
    let residuals = stationarity_residuals(&kernel, params, corr, &measure)?;
    if !residuals.is_stationary(FRSB_TOLERANCE) {
        return Err(Error::NonConvergence {
            what: format!(
                "FRSB stationarity (q0 = {q0} from -B'(2(q_c-q0)) = q0 sqrt(mu^3 t); printed variant q0 = {})",
                tri.q0_printed
            ),
            residual: residuals.max_defect(),
        });
    }
    let free_energy = eval_functional(&kernel, params, corr, &measure)?;
    let s = (mu * mu * mu * t).sqrt();
    let mut extras = base_extras(params, corr);
    extras.insert("q_0".into(), q0);
    extras.insert("q_star".into(), q_star);
    extras.insert("mu_larkin".into(), tri.mu_larkin);
    let mut alternatives = BTreeMap::new();
    alternatives.insert("q_0_printed".into(), tri.q0_printed);
    alternatives.insert(
        "stationarity_defect_printed_q_0".into(),
        (-2.0 * corr.b1(2.0 * tri.spread) - 2.0 * tri.q0_printed * s).abs(),
    );
    alternatives.insert("stationarity_defect_q_0".into(), (-2.0 * corr.b1(2.0 * tri.spread) - 2.0 * q0 * s).abs());
    if let Correlator::PowerLaw { g, a, gamma } = corr {
        if *g == 1.0 && *a == 1.0 {
            let (c0, _) = power_law_constants(*gamma, t);
            alternatives.insert("q_0_closed_form".into(), q0_closed_form(*gamma, t, mu));
            alternatives.insert("q_0_printed_closed_form".into(), q0_printed_closed_form(*gamma, t, mu));
            alternatives.insert("spread_closed_form".into(), 0.5 * (c0 * mu.powf(-1.5 / (2.0 + gamma)) - 1.0));
        }
    }
    Ok(RsbSolution { phase: Phase::Frsb, q_c, measure, extras, alternatives, free_energy, residuals })
}

/// `(c₀, c₁) = ((2γ(γ+1)/√t)^{1/(γ+2)}, γt/c₀^{1+γ})` for `B = (1 + x)^{−γ}`.
pub fn power_law_constants(gamma: f64, t: f64) -> (f64, f64) {
    let c0 = (2.0 * gamma * (gamma + 1.0) / t.sqrt()).powf(1.0 / (gamma + 2.0));
    (c0, gamma * t / c0.powf(1.0 + gamma))
}

/// Printed closed form `q₀ = c₁ μ^{3(γ+1)/(2(γ+2)) + 3}` (unit power law).
pub fn q0_printed_closed_form(gamma: f64, t: f64, mu: f64) -> f64 {
    let (_, c1) = power_law_constants(gamma, t);
    c1 * mu.powf(3.0 * (gamma + 1.0) / (2.0 * (gamma + 2.0)) + 3.0)
}

/// Closed form consistent with `F(q₀) = 0` (unit power law):
/// `q₀ = γ/(√t c₀^{γ+1}) · μ^{−3/(2(γ+2))}`.
pub fn q0_closed_form(gamma: f64, t: f64, mu: f64) -> f64 {
    let (c0, _) = power_law_constants(gamma, t);
    gamma / (t.sqrt() * c0.powf(gamma + 1.0)) * mu.powf(-3.0 / (2.0 * (gamma + 2.0)))
}

/// RS if [`is_rs`], otherwise one-step or full RSB according to the shape of `U_B`.
pub fn classify(params: &ModelParams, corr: &Correlator) -> Result<Phase> {
    if is_rs(params, corr) {
        return Ok(Phase::Rs);
    }
    match corr.ub_shape(params.t) {
        UbShape::StrictlyConvex | UbShape::Linear => Ok(Phase::OneRsb),
        UbShape::StrictlyConcave => Ok(Phase::Frsb),
        UbShape::Indeterminate => Err(Error::Unsupported(
            "the shape of U_B is neither convex, concave nor linear; no closed-form solver applies".into(),
        )),
    }
}

/// Classifies and dispatches to the matching solver.
pub fn solve(params: &ModelParams, corr: &Correlator) -> Result<RsbSolution> {
    match classify(params, corr)? {
        Phase::Rs => solve_rs(params, corr),
        Phase::OneRsb => solve_1rsb(params, corr),
        Phase::Frsb => solve_frsb(params, corr),
    }
}

/// One point of an RS/RSB boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    /// Inverse temperature.
    pub beta: f64,
    /// The largest mass at which the RS test flips.
    pub mu_boundary: f64,
    /// Every flip found on the scan, in increasing order.
    pub flips: Vec<f64>,
    /// Phase just below `mu_boundary`.
    pub phase_left: Phase,
    /// Phase just above `mu_boundary`.
    pub phase_right: Phase,
}

/// The RS/RSB boundary in the `(β, μ)` plane at fixed `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseBoundaryCurve {
    /// Elastic strength.
    pub t: f64,
    /// The correlator.
    pub correlator: Correlator,
    /// Boundary points sorted by `β` (β values without a flip are omitted).
    pub points: Vec<BoundaryPoint>,
    /// The inverse temperature where the boundary meets `μ = 0`, if any.
    pub massless_intercept: Option<f64>,
}

/// Sweeps `beta_grid`; for each `β` scans `log μ` over `mu_range` at
/// `points_per_decade`, bisects every flip of [`is_rs`] to relative width
/// [`BOUNDARY_REL_WIDTH`] and keeps the largest.
pub fn phase_boundary(
    t: f64,
    corr: &Correlator,
    beta_grid: &[f64],
    mu_range: (f64, f64),
    points_per_decade: usize,
) -> Result<PhaseBoundaryCurve> {
    ensure_domain(beta_grid.windows(2).all(|w| w[0] <= w[1]), || "beta grid must be sorted".into())?;
    ensure_domain(mu_range.0 > 0.0 && mu_range.1 > mu_range.0, || "invalid mu range".into())?;
    let n = (((mu_range.1 / mu_range.0).log10() * points_per_decade as f64).ceil() as usize).max(1) + 1;
    let mu_grid = log_grid(mu_range.0, mu_range.1, n);
    let rsb_phase = |p: &ModelParams| classify(p, corr).unwrap_or(Phase::OneRsb);
    let results: Vec<Result<Option<BoundaryPoint>>> = beta_grid
        .par_iter()
        .map(|&beta| {
            let params = ModelParams::new(beta, mu_grid[0], t)?;
            let rs_at = |mu: f64| is_rs(&params.with_mu(mu).expect("positive mass"), corr);
            let states: Vec<bool> = mu_grid.iter().map(|&mu| rs_at(mu)).collect();
            let mut flips = Vec::new();
            for i in 0..n - 1 {
                if states[i] != states[i + 1] {
                    let (mut lo, mut hi) = (mu_grid[i], mu_grid[i + 1]);
                    while hi / lo - 1.0 > BOUNDARY_REL_WIDTH {
                        let mid = (lo * hi).sqrt();
                        if rs_at(mid) == states[i] {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    flips.push((lo * hi).sqrt());
                }
            }
            let Some(&mu_b) = flips.last() else {
                return Ok(None);
            };
            let left = params.with_mu(mu_b * (1.0 - 10.0 * BOUNDARY_REL_WIDTH))?;
            let right = params.with_mu(mu_b * (1.0 + 10.0 * BOUNDARY_REL_WIDTH))?;
            let label = |p: &ModelParams| {
                if is_rs(p, corr) {
                    Phase::Rs
                } else {
                    rsb_phase(p)
                }
            };
            Ok(Some(BoundaryPoint {
                beta,
                mu_boundary: mu_b,
                flips,
                phase_left: label(&left),
                phase_right: label(&right),
            }))
        })
        .collect();
    let mut points = Vec::new();
    for r in results {
        if let Some(p) = r? {
            points.push(p);
        }
    }
    Ok(PhaseBoundaryCurve {
        t,
        correlator: corr.clone(),
        points,
        massless_intercept: massless_transition_beta(t, corr),
    })
}
