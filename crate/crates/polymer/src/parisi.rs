//! The Parisi functional and the stationarity system of the Parisi pair.
//!
//! For a pair `(q, ζ)` with gap function `δ(s) = ∫_s^q ζ([0, u]) du` the
//! stationarity system reads
//!
//! * `βδ(0) = R₁(μ)` (the Larkin condition), and
//! * `ζ` is carried by the maximizers of `f(s) = ∫₀^s F(u) du`, where
//!   `F(s) = −2B′(2(q − s)) + ∫₀^s K′(βδ(u)) du`.
//!
//! With the continuum kernel `K′(x) = −2/(x³t)` this is the continuum system;
//! with a lattice kernel it is the finite-`L` system. Everything here is
//! generic over [`ResolventKernel`] except the functional itself, which is
//! implemented literally in both forms so that their agreement as `L → ∞` is
//! a test rather than an assumption.

use serde::{Deserialize, Serialize};

use crate::correlator::Correlator;
use crate::error::{ensure_domain, Error, Result};
use crate::kernels::ResolventKernel;
use crate::model::{ModelParams, ParisiMeasure, Piece, PieceKind};
use crate::numerics::integrate;

/// Number of grid points on `[0, q)` used by [`stationarity_residuals`].
pub const RESIDUAL_GRID_POINTS: usize = 2000;
/// Extra points inserted in each grid cell where `F` changes sign.
pub const REFINEMENT_FACTOR: usize = 10;
/// Tolerance for "f is maximized on the support".
pub const TIE_TOLERANCE: f64 = 1e-9;
/// Absolute tolerance of the adaptive quadratures in this module.
pub const QUADRATURE_TOL: f64 = 1e-12;

/// Stationarity diagnostics of a pair `(q, ζ)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StationarityResiduals {
    /// `βδ(0) − R₁(μ)`.
    pub larkin_residual: f64,
    /// `max_{s ∈ supp ζ} |f(s) − sup f|` over the test grid.
    pub support_max_f_gap: f64,
    /// `max(0, sup_{off support} f − sup_{support} f)` over the test grid.
    pub offsupport_violation: f64,
    /// `sup_{support} f − sup_{off support} f` (signed; positive means `f` is
    /// strictly smaller off the support on every grid point).
    pub offsupport_margin: f64,
    /// `(s, f(s))` on the uniform base grid of `[0, q)`.
    pub f_values: Vec<[f64; 2]>,
}

impl StationarityResiduals {
    /// Largest of the three scalar defects.
    pub fn max_defect(&self) -> f64 {
        self.larkin_residual.abs().max(self.support_max_f_gap).max(self.offsupport_violation)
    }

    /// True when the Larkin and support defects are below `tol` and `f` is not
    /// larger off the support than on it (up to [`TIE_TOLERANCE`]).
    pub fn is_stationary(&self, tol: f64) -> bool {
        self.larkin_residual.abs() <= tol && self.support_max_f_gap <= tol && self.offsupport_violation <= TIE_TOLERANCE
    }
}

/// `(β²/2)(B(0) − B(2/(β√(μt))))`, the free energy of a replica-symmetric point.
pub fn rs_free_energy(params: &ModelParams, corr: &Correlator) -> f64 {
    let b = params.beta;
    0.5 * b * b * (corr.b(0.0) - corr.b(2.0 * params.s_bar() / b))
}

/// The Parisi functional at `(ζ.q(), ζ)`: the continuum `𝒫_β` for a
/// continuum kernel, the finite-`L` `𝒫_β^L` for a lattice kernel.
///
/// The endpoint `q` is the one carried by the measure.
pub fn eval_functional(
    kernel: &ResolventKernel,
    params: &ModelParams,
    corr: &Correlator,
    zeta: &ParisiMeasure,
) -> Result<f64> {
    eval_functional_with_cut(kernel, params, corr, zeta, zeta.q_star())
}

/// [`eval_functional`] with an explicit choice of the cut `q_*`: any point in
/// `[sup supp ζ, q)` gives the same value.
pub fn eval_functional_with_cut(
    kernel: &ResolventKernel,
    params: &ModelParams,
    corr: &Correlator,
    zeta: &ParisiMeasure,
    cut: f64,
) -> Result<f64> {
    let q = zeta.q();
    ensure_domain(cut >= zeta.q_star() && cut < q, || {
        format!("cut {cut} must lie in [q* = {}, q = {q})", zeta.q_star())
    })?;
    let (beta, mu, t) = (params.beta, params.mu, params.t);
    let gap = q - cut;
    let disorder = -2.0 * beta * beta * b_prime_integral(corr, zeta)?;
    let value = if kernel.is_continuum() {
        // ∫₀^{q_*} du/(βtδ²) − 1/(βt(q − q_*)) − 2β²∫ζB′ − βμq + 2√(μ/t)
        let kinetic =
            gap_integral(zeta, cut, |da, db, w| Ok(w / (beta * t * da * db)), |d| Ok(1.0 / (beta * t * d * d)))?;
        kinetic - 1.0 / (beta * t * gap) + disorder - beta * mu * q + 2.0 * (mu / t).sqrt()
    } else {
        // L^{-1/2}log det(μ − tΔ) − L^{-1/2}log det(K(βgap) − tΔ) + βgap K(βgap)
        // + ∫₀^{q_*} βK(βδ) − 2β²∫ζB′ − βμq
        let kg = kernel.k(beta * gap)?;
        let kinetic = gap_integral(
            zeta,
            cut,
            |da, db, w| kernel.k_cell_integral(beta, da, db, w),
            |d| Ok(beta * kernel.k(beta * d)?),
        )?;
        kernel.logdet_diff(mu, kg) + beta * gap * kg + kinetic + disorder - beta * mu * q
    };
    Ok(0.5 * value)
}

/// `∫₀^q ζ([0, u]) B′(2(q − u)) du`, exact on constant pieces.
fn b_prime_integral(corr: &Correlator, zeta: &ParisiMeasure) -> Result<f64> {
    let q = zeta.q();
    let mut total = 0.0;
    for p in zeta.pieces() {
        total += match p.kind {
            PieceKind::Constant(c) => {
                if c == 0.0 {
                    0.0
                } else {
                    c * 0.5 * (corr.b(2.0 * (q - p.start)) - corr.b(2.0 * (q - p.end)))
                }
            }
            _ => integrate(|u| p.cdf(u) * corr.b1(2.0 * (q - u)), p.start, p.end, QUADRATURE_TOL, 1e-14)?,
        };
    }
    Ok(total)
}

/// `∫₀^{cut} h(δ(u)) du` split over the tiles: `cell(d_left, d_right, width)`
/// integrates exactly where `δ` is linear (constant CDF), `point(δ)` is the
/// integrand used by adaptive quadrature elsewhere.
fn gap_integral<C, P>(zeta: &ParisiMeasure, cut: f64, mut cell: C, mut point: P) -> Result<f64>
where
    C: FnMut(f64, f64, f64) -> Result<f64>,
    P: FnMut(f64) -> Result<f64>,
{
    let mut total = 0.0;
    for p in zeta.pieces() {
        let (a, b) = (p.start, p.end.min(cut));
        if b <= a {
            continue;
        }
        total += if p.is_constant() {
            cell(zeta.delta_unchecked(a), zeta.delta_unchecked(b), b - a)?
        } else {
            quad_gap(zeta, a, b, &mut point)?
        };
    }
    Ok(total)
}

fn quad_gap<P: FnMut(f64) -> Result<f64>>(zeta: &ParisiMeasure, a: f64, b: f64, point: &mut P) -> Result<f64> {
    let mut err = None;
    let v = integrate(
        |u| match point(zeta.delta_unchecked(u)) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        },
        a,
        b,
        QUADRATURE_TOL,
        1e-14,
    );
    match err {
        Some(e) => Err(e),
        None => v,
    }
}

/// `F(s) = −2B′(2(q − s)) + ∫₀^s K′(βδ(u)) du` for `s ∈ [0, q)`.
pub fn big_f(
    kernel: &ResolventKernel,
    params: &ModelParams,
    corr: &Correlator,
    zeta: &ParisiMeasure,
    s: f64,
) -> Result<f64> {
    Ok(f_profile(kernel, params, corr, zeta, &[s])?[0].0)
}

/// `f(s) = ∫₀^s F(u) du` for `s ∈ [0, q)`.
pub fn little_f(
    kernel: &ResolventKernel,
    params: &ModelParams,
    corr: &Correlator,
    zeta: &ParisiMeasure,
    s: f64,
) -> Result<f64> {
    Ok(f_profile(kernel, params, corr, zeta, &[s])?[0].1)
}

/// `(F(s), f(s))` at every point of `points` (any order, each in `[0, q)`).
///
/// The kernel integrals are accumulated along the sorted points: with
/// `A(s) = ∫₀^s K′(βδ)` and `M(s) = ∫₀^s (s − u) K′(βδ(u)) du` one has
/// `F = −2B′(2(q − s)) + A(s)` and `f = B(2(q − s)) − B(2q) + M(s)`.
pub fn f_profile(
    kernel: &ResolventKernel,
    params: &ModelParams,
    corr: &Correlator,
    zeta: &ParisiMeasure,
    points: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let q = zeta.q();
    for &s in points {
        ensure_domain((0.0..q).contains(&s), || format!("F, f evaluated at s = {s} outside [0, q = {q})"))?;
    }
    let beta = params.beta;
    let pieces: Vec<Piece<'_>> = zeta.pieces().collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[i].total_cmp(&points[j]));

    let mut out = vec![(0.0, 0.0); points.len()];
    let (mut pos, mut a_acc, mut m_acc) = (0.0f64, 0.0f64, 0.0f64);
    let mut tile = 0usize;
    for &idx in &order {
        let target = points[idx];
        // Advance from `pos` to `target`, splitting at tile boundaries.
        while pos < target {
            while pieces[tile].end <= pos {
                tile += 1;
            }
            let p = pieces[tile];
            let next = target.min(p.end);
            let w = next - pos;
            let (j0, j1) = if p.is_constant() {
                kernel.kprime_cell_moments(beta, zeta.delta_unchecked(pos), zeta.delta_unchecked(next), w)?
            } else {
                let eval = |u: f64, weighted: bool| -> Result<f64> {
                    let kp = kernel.k_prime(beta * zeta.delta_unchecked(u))?;
                    Ok(if weighted { (next - u) * kp } else { kp })
                };
                (quad_point(pos, next, |u| eval(u, false))?, quad_point(pos, next, |u| eval(u, true))?)
            };
            m_acc += w * a_acc + j1;
            a_acc += j0;
            pos = next;
        }
        let big = -2.0 * corr.b1(2.0 * (q - target)) + a_acc;
        let little = corr.b(2.0 * (q - target)) - corr.b(2.0 * q) + m_acc;
        out[idx] = (big, little);
    }
    Ok(out)
}

fn quad_point<P: FnMut(f64) -> Result<f64>>(a: f64, b: f64, mut g: P) -> Result<f64> {
    let mut err = None;
    let v = integrate(
        |u| match g(u) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        },
        a,
        b,
        QUADRATURE_TOL,
        1e-14,
    );
    match err {
        Some(e) => Err(e),
        None => v,
    }
}

/// Stationarity residuals on the default grid of [`RESIDUAL_GRID_POINTS`].
pub fn stationarity_residuals(
    kernel: &ResolventKernel,
    params: &ModelParams,
    corr: &Correlator,
    zeta: &ParisiMeasure,
) -> Result<StationarityResiduals> {
    stationarity_residuals_on(kernel, params, corr, zeta, RESIDUAL_GRID_POINTS)
}

/// Stationarity residuals on a uniform grid of `n` points of `[0, q)`, refined
/// by [`REFINEMENT_FACTOR`] in every cell where `F` changes sign, together
/// with the atoms and the endpoints of the absolutely continuous pieces.
pub fn stationarity_residuals_on(
    kernel: &ResolventKernel,
    params: &ModelParams,
    corr: &Correlator,
    zeta: &ParisiMeasure,
    n: usize,
) -> Result<StationarityResiduals> {
    ensure_domain(n >= 2, || "residual grid needs at least two points".into())?;
    let q = zeta.q();
    let beta = params.beta;
    let larkin = beta * zeta.delta_unchecked(0.0) - kernel.r1(params.mu);

    let base: Vec<f64> = (0..n).map(|i| q * i as f64 / n as f64).collect();
    let base_vals = f_profile(kernel, params, corr, zeta, &base)?;

    let mut points = base.clone();
    for i in 0..n - 1 {
        let (fa, fb) = (base_vals[i].0, base_vals[i + 1].0);
        if fa.signum() != fb.signum() || fa == 0.0 {
            for k in 1..=REFINEMENT_FACTOR {
                points.push(base[i] + (base[i + 1] - base[i]) * k as f64 / (REFINEMENT_FACTOR + 1) as f64);
            }
        }
    }
    let continuous: Vec<(f64, f64)> = zeta.pieces().filter(|p| !p.is_constant()).map(|p| (p.start, p.end)).collect();
    let atoms = zeta.atoms();
    for &(a, b) in &continuous {
        points.push(a);
        if b < q {
            points.push(b);
        }
    }
    for &(loc, _) in &atoms {
        points.push(loc);
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    let vals = f_profile(kernel, params, corr, zeta, &points)?;

    let in_support = |s: f64| {
        atoms.iter().any(|&(loc, _)| (s - loc).abs() <= 1e-14 * q.max(1.0))
            || continuous.iter().any(|&(a, b)| s >= a && s <= b)
    };
    let mut sup_all = f64::NEG_INFINITY;
    let mut sup_support = f64::NEG_INFINITY;
    let mut sup_off = f64::NEG_INFINITY;
    let mut min_support = f64::INFINITY;
    for (&s, &(_, f)) in points.iter().zip(&vals) {
        if !f.is_finite() {
            return Err(Error::NonConvergence { what: format!("f evaluated at s = {s}"), residual: f });
        }
        sup_all = sup_all.max(f);
        if in_support(s) {
            sup_support = sup_support.max(f);
            min_support = min_support.min(f);
        } else {
            sup_off = sup_off.max(f);
        }
    }
    let support_gap = if sup_support.is_finite() { sup_all - min_support } else { f64::INFINITY };
    let margin = sup_support - sup_off;
    Ok(StationarityResiduals {
        larkin_residual: larkin,
        support_max_f_gap: support_gap,
        offsupport_violation: (-margin).max(0.0),
        offsupport_margin: margin,
        f_values: base.iter().zip(&base_vals).map(|(&s, &(_, f))| [s, f]).collect(),
    })
}
