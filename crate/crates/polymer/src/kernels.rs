//! Resolvent kernels of the discrete and continuum Laplacian.
//!
//! On the periodic lattice `Λ_L = L^{−1/2}{0, …, L−1}` the Laplacian `Δ_L`
//! has eigenvalues `−4L sin²(kπ/L)`. Every lattice quantity is a normalized
//! trace or matrix entry of a function of `μI − tΔ_L`, computed by a folded
//! spectral sum that pairs `k` with `L − k`. The continuum kernel carries the
//! closed forms `R₁ = 1/√(μt)`, `K = 1/(x²t)`, … of the theory. Both flavors
//! share one interface, [`ResolventKernel`], so the Parisi formulas run
//! unchanged at finite `L` and in the continuum.
//!
//! Note that the lattice sums do not tend to those closed forms at the same
//! `t`: the Riemann-sum limit of `R₁` is `∫_ℝ dξ/(μ + 4π²tξ²) = 1/(2√(μt))`,
//! i.e. the continuum kernel at stiffness `4t`. The Green's function and the
//! heat kernel do converge to their continuum counterparts at stiffness `t`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_domain, Error, Result};
use crate::model::{ModelParams, ParisiMeasure};

/// Relative accuracy of the inverse functions `K` and `U`.
pub const INVERSE_REL_TOL: f64 = 1e-13;
/// Iteration cap of the inverse-function bisections.
pub const INVERSE_MAX_ITER: usize = 200;

/// Which resolvent family a kernel evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "flavor", rename_all = "snake_case")]
pub enum Flavor {
    /// Continuum limit with elastic strength `t`.
    Continuum {
        /// Elastic strength.
        t: f64,
    },
    /// Periodic lattice with `l` sites and elastic strength `t`.
    Lattice {
        /// Number of sites `L`.
        l: usize,
        /// Elastic strength.
        t: f64,
    },
}

/// Folded spectrum of `−tΔ_L`: distinct eigenvalues with trace weights.
#[derive(Debug)]
struct Spectrum {
    l: usize,
    /// `4tL sin²(πk/L)` for `k = 0..=⌊L/2⌋`.
    lambda: Vec<f64>,
    /// Normalized-trace weights: `1/L` for `k = 0` (and `k = L/2`), else `2/L`.
    weight: Vec<f64>,
    /// Memo of `K` values keyed by the bit pattern of the argument; lattice
    /// `K` costs a few `O(L)` sums, and profile computations revisit points.
    k_memo: Mutex<HashMap<u64, f64>>,
}

/// Entries kept in the `K` memo before it is cleared.
const K_MEMO_CAPACITY: usize = 1 << 16;

impl Spectrum {
    fn new(l: usize, t: f64) -> Self {
        let lf = l as f64;
        let kmax = l / 2;
        let mut lambda = Vec::with_capacity(kmax + 1);
        let mut weight = Vec::with_capacity(kmax + 1);
        for k in 0..=kmax {
            let s = (std::f64::consts::PI * k as f64 / lf).sin();
            lambda.push(4.0 * t * lf * s * s);
            let w = if k == 0 || (l % 2 == 0 && k == kmax) { 1.0 / lf } else { 2.0 / lf };
            weight.push(w);
        }
        Spectrum { l, lambda, weight, k_memo: Mutex::new(HashMap::new()) }
    }

    /// `Σ_k w_k c_k f(λ_k)` with an optional per-mode multiplier `c_k`.
    fn sum<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.lambda.iter().zip(&self.weight).map(|(&l, &w)| w * f(l)).sum()
    }

    /// `(Σ w/(μ+λ), Σ w/(μ+λ)², Σ w/(μ+λ)³)` in one pass.
    fn moments(&self, mu: f64) -> (f64, f64, f64) {
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for (&l, &w) in self.lambda.iter().zip(&self.weight) {
            let r = 1.0 / (mu + l);
            let wr = w * r;
            a += wr;
            b += wr * r;
            c += wr * r * r;
        }
        (a, b, c)
    }

    fn sum_weighted<F: Fn(f64) -> f64>(&self, mult: &[f64], f: F) -> f64 {
        self.lambda.iter().zip(&self.weight).zip(mult).map(|((&l, &w), &c)| w * c * f(l)).sum()
    }

    /// `cos(2πkj/L)` for every folded mode, computed from `kj mod L` so that
    /// large products stay exact.
    fn cosines(&self, j: usize) -> Vec<f64> {
        let l = self.l as u128;
        (0..self.lambda.len())
            .map(|k| {
                let r = (k as u128 * j as u128) % l;
                (2.0 * std::f64::consts::PI * r as f64 / self.l as f64).cos()
            })
            .collect()
    }
}

/// The function family `R₁, R₂, K, K′, U`, log-determinant differences and
/// Green's functions for one flavor.
#[derive(Debug, Clone)]
pub struct ResolventKernel {
    flavor: Flavor,
    spectrum: Option<Arc<Spectrum>>,
}

impl ResolventKernel {
    /// Continuum kernel with elastic strength `t`.
    pub fn continuum(t: f64) -> Result<Self> {
        ensure_domain(t > 0.0 && t.is_finite(), || format!("t = {t} must be positive"))?;
        Ok(ResolventKernel { flavor: Flavor::Continuum { t }, spectrum: None })
    }

    /// Lattice kernel with `l ≥ 1` sites and elastic strength `t`.
    pub fn lattice(l: usize, t: f64) -> Result<Self> {
        ensure_domain(t > 0.0 && t.is_finite(), || format!("t = {t} must be positive"))?;
        ensure_domain(l >= 1, || "lattice size must be at least 1".into())?;
        Ok(ResolventKernel { flavor: Flavor::Lattice { l, t }, spectrum: Some(Arc::new(Spectrum::new(l, t))) })
    }

    /// The kernel matching `params`: lattice if `lattice_size` is set.
    pub fn for_params(params: &ModelParams) -> Result<Self> {
        match params.lattice_size {
            Some(l) => Self::lattice(l, params.t),
            None => Self::continuum(params.t),
        }
    }

    /// The flavor of this kernel.
    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    /// Elastic strength `t`.
    pub fn t(&self) -> f64 {
        match self.flavor {
            Flavor::Continuum { t } | Flavor::Lattice { t, .. } => t,
        }
    }

    /// True for the continuum flavor.
    pub fn is_continuum(&self) -> bool {
        matches!(self.flavor, Flavor::Continuum { .. })
    }

    fn sqrt_l(&self) -> f64 {
        match self.flavor {
            Flavor::Lattice { l, .. } => (l as f64).sqrt(),
            Flavor::Continuum { .. } => f64::INFINITY,
        }
    }

    /// `R₁(μ) = L^{1/2} tr((μI − tΔ_L)^{−1})`; continuum `1/√(μt)`. Needs `μ > 0`.
    pub fn r1(&self, mu: f64) -> f64 {
        match (&self.spectrum, self.flavor) {
            (Some(sp), _) => self.sqrt_l() * sp.sum(|l| 1.0 / (mu + l)),
            (None, Flavor::Continuum { t }) => 1.0 / (mu * t).sqrt(),
            _ => unreachable!("lattice kernels always carry a spectrum"),
        }
    }

    /// `R₂(μ) = L^{1/2} tr((μI − tΔ_L)^{−2}) = −R₁′(μ)`; continuum `1/(2√(μ³t))`.
    pub fn r2(&self, mu: f64) -> f64 {
        match (&self.spectrum, self.flavor) {
            (Some(sp), _) => self.sqrt_l() * sp.sum(|l| 1.0 / ((mu + l) * (mu + l))),
            (None, Flavor::Continuum { t }) => 0.5 / (mu * mu * mu * t).sqrt(),
            _ => unreachable!("lattice kernels always carry a spectrum"),
        }
    }

    /// `K = R₁⁻¹`; continuum `1/(x²t)`. Lattice values come from a bracketed
    /// solve (Newton steps in `ln μ`, safeguarded by bisection) to relative
    /// accuracy [`INVERSE_REL_TOL`].
    pub fn k(&self, x: f64) -> Result<f64> {
        ensure_domain(x > 0.0 && x.is_finite(), || format!("K evaluated at x = {x} <= 0"))?;
        let t = self.t();
        let guess = 1.0 / (x * x * t);
        match &self.spectrum {
            None => Ok(guess),
            Some(sp) => {
                let key = x.to_bits();
                if let Some(v) = sp.k_memo.lock().ok().and_then(|m| m.get(&key).copied()) {
                    return Ok(v);
                }
                let sl = self.sqrt_l();
                // ln R₁ and its derivative in ln μ: −μR₂/R₁.
                let mu = self.invert_decreasing(
                    |mu| {
                        let (a, b, _) = sp.moments(mu);
                        ((sl * a).ln(), -mu * b / a)
                    },
                    x.ln(),
                    guess,
                    "K = inverse of R1",
                )?;
                if let Ok(mut m) = sp.k_memo.lock() {
                    if m.len() >= K_MEMO_CAPACITY {
                        m.clear();
                    }
                    m.insert(key, mu);
                }
                Ok(mu)
            }
        }
    }

    /// `K′(x) = −1/R₂(K(x))`; continuum `−2/(x³t)`.
    pub fn k_prime(&self, x: f64) -> Result<f64> {
        ensure_domain(x > 0.0 && x.is_finite(), || format!("K' evaluated at x = {x} <= 0"))?;
        if self.is_continuum() {
            return Ok(-2.0 / (x * x * x * self.t()));
        }
        Ok(-1.0 / self.r2(self.k(x)?))
    }

    /// `U = (−K′)⁻¹`; continuum `(2/(yt))^{1/3}`.
    ///
    /// On the lattice `−K′(R₁(μ)) = 1/R₂(μ)`, so `U(y) = R₁(μ)` where `μ`
    /// solves `R₂(μ) = 1/y`.
    pub fn u_inv(&self, y: f64) -> Result<f64> {
        ensure_domain(y > 0.0 && y.is_finite(), || format!("U evaluated at y = {y} <= 0"))?;
        let t = self.t();
        let x_guess = (2.0 / (y * t)).cbrt();
        match &self.spectrum {
            None => Ok(x_guess),
            Some(sp) => {
                let sl = self.sqrt_l();
                let mu_guess = 1.0 / (x_guess * x_guess * t);
                let mu = self.invert_decreasing(
                    |mu| {
                        let (_, b, c) = sp.moments(mu);
                        ((sl * b).ln(), -2.0 * mu * c / b)
                    },
                    -y.ln(),
                    mu_guess,
                    "U = inverse of -K'",
                )?;
                Ok(self.r1(mu))
            }
        }
    }

    /// Solves `h(ln μ) = target` for a decreasing `h` given as
    /// `μ ↦ (h, dh/d ln μ)`. The root is first bracketed geometrically around
    /// `guess`; Newton steps that leave the bracket are replaced by bisection.
    fn invert_decreasing<F: Fn(f64) -> (f64, f64)>(&self, f: F, target: f64, guess: f64, what: &str) -> Result<f64> {
        let mut lo = guess.ln();
        let mut hi = lo;
        let mut iterations = 0;
        let mut val = f(guess);
        // Expand until h(lo) ≥ target ≥ h(hi).
        let step = 1e-3f64.ln().abs();
        let mut h_lo = val.0;
        while h_lo < target {
            lo -= step;
            h_lo = f(lo.exp()).0;
            iterations += 1;
            if iterations > 100 {
                return Err(Error::Internal(format!("{what}: lower bracket not found")));
            }
        }
        let mut h_hi = val.0;
        while h_hi > target {
            hi += step;
            h_hi = f(hi.exp()).0;
            iterations += 1;
            if iterations > 200 {
                return Err(Error::Internal(format!("{what}: upper bracket not found")));
            }
        }
        let mut x = guess.ln().clamp(lo, hi);
        if x != guess.ln() {
            val = f(x.exp());
        }
        for _ in 0..INVERSE_MAX_ITER {
            let g = val.0 - target;
            if g == 0.0 {
                return Ok(x.exp());
            }
            if g > 0.0 {
                lo = lo.max(x);
            } else {
                hi = hi.min(x);
            }
            let newton = x - g / val.1;
            let next = if val.1 < 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            let moved = (next - x).abs();
            x = next;
            if moved <= INVERSE_REL_TOL * 0.1 || hi - lo <= INVERSE_REL_TOL {
                return Ok(x.exp());
            }
            val = f(x.exp());
        }
        Err(Error::Internal(format!(
            "{what}: no convergence after {INVERSE_MAX_ITER} iterations (bracket width {:e})",
            hi - lo
        )))
    }

    /// `∫_{y_lo}^{y_hi} K(y) dy` for `0 < y_lo, y_hi`.
    ///
    /// With `y = R₁(μ)` one has `∫K dy = −∫μR₂(μ) dμ`, whose lattice
    /// antiderivative is `−L^{1/2}Σ w (log(μ+λ) + λ/(μ+λ))`; the difference
    /// reduces to `−logdet_diff(K(y_hi), K(y_lo)) + K(y_hi) y_hi − K(y_lo) y_lo`.
    /// Continuum: `1/(y_lo t) − 1/(y_hi t)`.
    pub fn k_integral(&self, y_hi: f64, y_lo: f64) -> Result<f64> {
        if self.is_continuum() {
            let t = self.t();
            return Ok(1.0 / (y_lo * t) - 1.0 / (y_hi * t));
        }
        let (k_hi, k_lo) = (self.k(y_hi)?, self.k(y_lo)?);
        Ok(-self.logdet_diff(k_hi, k_lo) + k_hi * y_hi - k_lo * y_lo)
    }

    /// Integrals of `K′(βδ)` over a cell of width `w` on which `δ` decreases
    /// linearly from `d_left` to `d_right > 0`:
    /// returns `(∫ K′(βδ(u)) du, ∫ (b − u) K′(βδ(u)) du)` with `b` the right end.
    ///
    /// Continuum values are exact rational expressions; lattice values use the
    /// antiderivatives of `K` when the cell is wide enough for them to be
    /// well conditioned, and 20-point Gauss–Legendre otherwise.
    pub fn kprime_cell_moments(&self, beta: f64, d_left: f64, d_right: f64, w: f64) -> Result<(f64, f64)> {
        ensure_domain(d_right > 0.0 && d_left >= d_right && w >= 0.0, || {
            format!("cell moments need d_left >= d_right > 0, got {d_left}, {d_right}")
        })?;
        if w == 0.0 {
            return Ok((0.0, 0.0));
        }
        let (da, db) = (d_left, d_right);
        if self.is_continuum() {
            let c = -2.0 / (beta * beta * beta * self.t());
            let j0 = c * (da + db) * w / (2.0 * da * da * db * db);
            let j1 = c * w * w / (2.0 * db * da * da);
            return Ok((j0, j1));
        }
        let slope = (da - db) / w;
        if slope * w >= 1e-6 * db {
            let bc = beta * slope;
            let (ka, kb) = (self.k(beta * da)?, self.k(beta * db)?);
            let kint = self.k_integral(beta * da, beta * db)?;
            Ok(((ka - kb) / bc, w * ka / bc - kint / (bc * bc)))
        } else {
            let mut err = None;
            let mut eval = |v: f64, weight_v: bool| {
                let d = db + slope * v;
                match self.k_prime(beta * d) {
                    Ok(kp) => kp * if weight_v { v } else { 1.0 },
                    Err(e) => {
                        err = Some(e);
                        f64::NAN
                    }
                }
            };
            let j0 = crate::numerics::gauss_legendre(|v| eval(v, false), 0.0, w);
            let j1 = crate::numerics::gauss_legendre(|v| eval(v, true), 0.0, w);
            match err {
                Some(e) => Err(e),
                None => Ok((j0, j1)),
            }
        }
    }

    /// `∫ βK(βδ(u)) du` over a cell of width `w` on which `δ` decreases
    /// linearly from `d_left` to `d_right > 0`.
    pub fn k_cell_integral(&self, beta: f64, d_left: f64, d_right: f64, w: f64) -> Result<f64> {
        ensure_domain(d_right > 0.0 && d_left >= d_right && w >= 0.0, || {
            format!("cell integral needs d_left >= d_right > 0, got {d_left}, {d_right}")
        })?;
        if w == 0.0 {
            return Ok(0.0);
        }
        let (da, db) = (d_left, d_right);
        if self.is_continuum() {
            return Ok(w / (beta * self.t() * da * db));
        }
        let slope = (da - db) / w;
        if slope * w >= 1e-6 * db {
            Ok(self.k_integral(beta * da, beta * db)? / slope)
        } else {
            let mut err = None;
            let v = crate::numerics::gauss_legendre(
                |v| match self.k(beta * (db + slope * v)) {
                    Ok(k) => beta * k,
                    Err(e) => {
                        err = Some(e);
                        f64::NAN
                    }
                },
                0.0,
                w,
            );
            match err {
                Some(e) => Err(e),
                None => Ok(v),
            }
        }
    }

    /// `L^{−1/2}(log det(x − tΔ_L) − log det(y − tΔ_L))`; continuum
    /// `2(√x − √y)/√t`.
    pub fn logdet_diff(&self, x: f64, y: f64) -> f64 {
        match (&self.spectrum, self.flavor) {
            (Some(sp), Flavor::Lattice { l, .. }) => {
                let lf = l as f64;
                lf.sqrt() * sp.sum(|lam| ((x - y) / (y + lam)).ln_1p())
            }
            (None, Flavor::Continuum { t }) => 2.0 * (x.sqrt() - y.sqrt()) / t.sqrt(),
            _ => unreachable!("lattice kernels always carry a spectrum"),
        }
    }

    /// Lattice site index `j = ⌊L^{1/2} x⌋ mod L` of `[x]_L` (0 in the continuum).
    pub fn site_index(&self, x: f64) -> usize {
        match self.flavor {
            Flavor::Lattice { l, .. } => {
                let j = ((l as f64).sqrt() * x).floor() as i64;
                j.rem_euclid(l as i64) as usize
            }
            Flavor::Continuum { .. } => 0,
        }
    }

    /// Green's function `𝔾_{x,t}(μ)` (order 0) or its `μ`-derivative (order 1).
    ///
    /// Continuum: `𝔾 = (e^{−|x|√(μ/t)} − 1)/(2√(tμ))`, `𝔾′ = f(z)/(4√(tμ³))`
    /// with `z = |x|√(μ/t)` and `f(z) = 1 − e^{−z} − z e^{−z}`.
    /// Lattice: `G = L^{1/2}([(μ − tΔ)^{−1}]_{[x],0} − [(μ − tΔ)^{−1}]_{0,0})`
    /// and `G′ = −L^{1/2}([(μ − tΔ)^{−2}]_{[x],0} − [(μ − tΔ)^{−2}]_{0,0})`.
    pub fn green(&self, mu: f64, x: f64, order: u32) -> Result<f64> {
        ensure_domain(mu > 0.0 && mu.is_finite(), || format!("Green's function at mu = {mu} <= 0"))?;
        ensure_domain(order <= 1, || format!("Green's function order {order} outside 0..=1"))?;
        match (&self.spectrum, self.flavor) {
            (Some(sp), _) => {
                let j = self.site_index(x);
                if j == 0 {
                    return Ok(0.0);
                }
                let c: Vec<f64> = sp.cosines(j).into_iter().map(|c| c - 1.0).collect();
                let s = if order == 0 {
                    sp.sum_weighted(&c, |l| 1.0 / (mu + l))
                } else {
                    -sp.sum_weighted(&c, |l| 1.0 / ((mu + l) * (mu + l)))
                };
                Ok(self.sqrt_l() * s)
            }
            (None, Flavor::Continuum { t }) => Ok(continuum_green(mu, x, t, order)),
            _ => unreachable!("lattice kernels always carry a spectrum"),
        }
    }

    /// `R_{i,A}(μ) = L^{1/2} tr((μI − tΔ_L)^{−i} A)` for a symmetric circulant `A`
    /// (`order = i ∈ {1, 2}`). Lattice flavor only.
    pub fn r_a(&self, mu: f64, order: u32, a: &CirculantSymbol) -> Result<f64> {
        let sp = self.spectrum.as_ref().ok_or_else(|| Error::Domain("R_{i,A} needs a lattice kernel".into()))?;
        ensure_domain(a.len() == sp.l, || format!("circulant symbol has size {} but L = {}", a.len(), sp.l))?;
        ensure_domain(order == 1 || order == 2, || format!("R_(i,A) order {order} not in {{1,2}}"))?;
        let symbol = a.symbol_folded();
        let p = order as i32;
        Ok(self.sqrt_l() * sp.sum_weighted(&symbol, |l| (mu + l).powi(-p)))
    }
}

/// Continuum Green's function and its `μ`-derivative.
fn continuum_green(mu: f64, x: f64, t: f64, order: u32) -> f64 {
    let z = x.abs() * (mu / t).sqrt();
    if order == 0 {
        (-z).exp_m1() / (2.0 * (t * mu).sqrt())
    } else {
        let f = if z < 1e-3 {
            z * z * (0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0)
        } else {
            -(-z).exp_m1() - z * (-z).exp()
        };
        f / (4.0 * (t * mu * mu * mu).sqrt())
    }
}

/// A symmetric circulant matrix on `Λ_L`, given by its first row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirculantSymbol {
    first_row: Vec<f64>,
}

impl CirculantSymbol {
    /// Validates symmetry `first_row[j] = first_row[L − j]`.
    pub fn new(first_row: Vec<f64>) -> Result<Self> {
        let l = first_row.len();
        ensure_domain(l >= 1, || "circulant symbol needs at least one entry".into())?;
        for j in 1..l {
            let (a, b) = (first_row[j], first_row[l - j]);
            ensure_domain((a - b).abs() <= 1e-14 * a.abs().max(b.abs()).max(1.0), || {
                format!("circulant first row is not symmetric at j = {j}: {a} vs {b}")
            })?;
        }
        Ok(CirculantSymbol { first_row })
    }

    /// The identity on `L` sites.
    pub fn identity(l: usize) -> Result<Self> {
        ensure_domain(l >= 1, || "L must be at least 1".into())?;
        let mut row = vec![0.0; l];
        row[0] = 1.0;
        Self::new(row)
    }

    /// The displacement matrix `E^{x,y}` with lattice separation `j = [x − y]`:
    /// `(E u, u) = Σ_w ‖u(w + x) − u(w + y)‖²`, i.e. `2I − S^j − S^{−j}`.
    pub fn displacement(l: usize, j: usize) -> Result<Self> {
        ensure_domain(l >= 1, || "L must be at least 1".into())?;
        let j = j % l;
        let mut row = vec![0.0; l];
        if j != 0 {
            row[0] += 2.0;
            row[j] -= 1.0;
            row[(l - j) % l] -= 1.0;
        }
        Self::new(row)
    }

    /// Number of sites.
    pub fn len(&self) -> usize {
        self.first_row.len()
    }

    /// Always false for a validated symbol.
    pub fn is_empty(&self) -> bool {
        self.first_row.is_empty()
    }

    /// The first row.
    pub fn first_row(&self) -> &[f64] {
        &self.first_row
    }

    /// Eigenvalues `â(k) = Σ_j r_j cos(2πkj/L)` for the folded modes
    /// `k = 0..=⌊L/2⌋`, using only the nonzero entries of the row.
    fn symbol_folded(&self) -> Vec<f64> {
        let l = self.first_row.len();
        let nz: Vec<(usize, f64)> =
            self.first_row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect();
        (0..=l / 2)
            .map(|k| {
                nz.iter()
                    .map(|&(j, v)| {
                        let r = (k as u128 * j as u128) % l as u128;
                        v * (2.0 * std::f64::consts::PI * r as f64 / l as f64).cos()
                    })
                    .sum()
            })
            .collect()
    }
}

/// Eigenvalues `−4L sin²(kπ/L)` of `Δ_L`, `k = 0..L−1`.
pub fn laplacian_eigenvalues(l: usize) -> Vec<f64> {
    let lf = l as f64;
    (0..l)
        .map(|k| {
            let s = (std::f64::consts::PI * k as f64 / lf).sin();
            -4.0 * lf * s * s
        })
        .collect()
}

/// `log det(μI − tΔ_L) = Σ_k log(μ + 4tL sin²(kπ/L))`, summed in log space.
pub fn logdet(l: usize, t: f64, mu: f64) -> Result<f64> {
    ensure_domain(mu > 0.0 && t > 0.0 && l >= 1, || format!("logdet needs mu, t > 0 (mu = {mu}, t = {t})"))?;
    let lf = l as f64;
    Ok((0..l)
        .map(|k| {
            let s = (std::f64::consts::PI * k as f64 / lf).sin();
            (mu + 4.0 * t * lf * s * s).ln()
        })
        .sum())
}

/// Three-term expansion `L log L + L log t + 2L^{1/2}√(μ/t)` of [`logdet`].
pub fn logdet_asymptotic(l: usize, t: f64, mu: f64) -> f64 {
    let lf = l as f64;
    lf * lf.ln() + lf * t.ln() + 2.0 * lf.sqrt() * (mu / t).sqrt()
}

/// Normalized residual `|L^{−1/2} log det − L^{1/2} log(Lt) − 2√(μ/t)|`.
pub fn logdet_residual(l: usize, t: f64, mu: f64) -> Result<f64> {
    let lf = l as f64;
    Ok((logdet(l, t, mu)? / lf.sqrt() - lf.sqrt() * (lf * t).ln() - 2.0 * (mu / t).sqrt()).abs())
}

/// Pseudo-determinant `det₊(−L^{−1}Δ_L) = Π_{k≥1} 4 sin²(kπ/L)` (equal to `L²`
/// by the matrix-tree theorem), evaluated through a sum of logarithms.
pub fn pseudo_det(l: usize) -> f64 {
    let lf = l as f64;
    (1..l)
        .map(|k| {
            let s = (std::f64::consts::PI * k as f64 / lf).sin();
            (4.0 * s * s).ln()
        })
        .sum::<f64>()
        .exp()
}

/// `L^{1/2} tr(e^{τΔ_L})`; tends to `1/(2√(πτ))`.
pub fn heat_trace(l: usize, time: f64) -> Result<f64> {
    heat_entry(l, time, 0.0)
}

/// `L^{1/2} [e^{τΔ_L}]_{[x]_L, 0}`; tends to `e^{−x²/4τ}/(2√(πτ))`.
pub fn heat_entry(l: usize, time: f64, x: f64) -> Result<f64> {
    ensure_domain(time > 0.0 && l >= 1, || format!("heat kernel needs time > 0, got {time}"))?;
    let sp = Spectrum::new(l, 1.0);
    let j = ((l as f64).sqrt() * x).floor() as i64;
    let j = j.rem_euclid(l as i64) as usize;
    let c = sp.cosines(j);
    Ok((l as f64).sqrt() * sp.sum_weighted(&c, |lam| (-time * lam).exp()))
}

/// Continuum heat kernel `e^{−x²/4τ}/(2√(πτ))`.
pub fn heat_kernel_continuum(time: f64, x: f64) -> f64 {
    (-x * x / (4.0 * time)).exp() / (2.0 * (std::f64::consts::PI * time).sqrt())
}

/// Error envelope `L^{−1/2} + e^{−τL^{1/2}}/√τ + 1/√(τL)` of the heat trace.
pub fn heat_error_envelope(l: usize, time: f64) -> f64 {
    let lf = l as f64;
    lf.powf(-0.5) + (-time * lf.sqrt()).exp() / time.sqrt() + 1.0 / (time * lf).sqrt()
}

/// Error envelope `L^{−1/4}(1/(L^{1/4}μ) + 1/√t + 1/(L^{1/4}√(μt)))` of `R₁`.
pub fn r1_error_envelope(l: usize, mu: f64, t: f64) -> f64 {
    let q = (l as f64).powf(0.25);
    (1.0 / (q * mu) + 1.0 / t.sqrt() + 1.0 / (q * (mu * t).sqrt())) / q
}

/// `β⁻¹ R_{1,A}(K(β(q − q_*))) − ∫₀^{q_*} R_{2,A}(K(βδ(u))) K′(βδ(u)) du`:
/// the limiting expectation of `L^{−1/2}(Au, u)_N` under the lattice Gibbs
/// measure, for a pair `(q, ζ)` solving the lattice stationarity equations.
pub fn circulant_expectation(
    kernel: &ResolventKernel,
    params: &ModelParams,
    q: f64,
    zeta: &ParisiMeasure,
    a: &CirculantSymbol,
) -> Result<f64> {
    let beta = params.beta;
    let qs = zeta.q_star();
    let first = kernel.r_a(kernel.k(beta * (q - qs))?, 1, a)? / beta;
    let mut err = None;
    let integral = zeta.integrate_gap(0.0, qs, false, 1e-13, |_, d| {
        let eval = || -> Result<f64> {
            let kk = kernel.k(beta * d)?;
            Ok(kernel.r_a(kk, 2, a)? * kernel.k_prime(beta * d)?)
        };
        eval().unwrap_or_else(|e| {
            err = Some(e);
            f64::NAN
        })
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(first - integral?)
}
