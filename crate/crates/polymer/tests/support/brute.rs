//! Brute-force minimizer of the continuum Parisi functional.
//!
//! The CDF `x(u) = ζ([0, u])` is piecewise constant on `n` equal cells of
//! `[0, q]`, with the last cell pinned to 1. Then `δ` is piecewise linear,
//! `δ_n = 0`, `δ_i = δ_{i+1} + h x_i`, and the functional is evaluated
//! exactly cell by cell (the kinetic part after summation by parts of
//! `Σ h/(βtδ_cδ_{c+1}) − 1/(βth)`):
//!
//! `2𝒫 = Σ_{c<n−1} (1 − x_c)h/(βtδ_cδ_{c+1}) − 1/(βtδ_0) − β² Σ_i x_i (B(2(q − ih)) − B(2(q − (i+1)h))) − βμq + 2√(μ/t)`.
//!
//! The functional is convex in `x`, so the inner problem is solved by FISTA
//! with backtracking and adaptive restart, projecting onto nondecreasing
//! vectors in `[0, 1]` by pool-adjacent-violators and clipping. The outer
//! problem `sup_q inf_x` is concave in `q` and solved by golden section.
//! Nothing here calls into the library.

/// Result of the outer maximization.
pub struct BruteSolution {
    pub q: f64,
    pub value: f64,
    /// Cell values of the CDF on `[ih, (i+1)h)`.
    pub cdf: Vec<f64>,
    /// Total FISTA iterations.
    pub iterations: usize,
    /// `inf_x 𝒫` at every probed `q`, in probe order.
    pub probes: Vec<(f64, f64)>,
}

pub struct Problem<'a> {
    pub beta: f64,
    pub mu: f64,
    pub t: f64,
    pub b: &'a dyn Fn(f64) -> f64,
    pub cells: usize,
}

impl Problem<'_> {
    pub fn disorder_weights(&self, q: f64) -> Vec<f64> {
        let h = q / self.cells as f64;
        (0..self.cells)
            .map(|i| {
                let (a, c) = (i as f64 * h, (i + 1) as f64 * h);
                (self.b)(2.0 * (q - a)) - (self.b)(2.0 * (q - c))
            })
            .collect()
    }

    /// `𝒫(q, x)` and, if requested, its gradient in the free cells.
    pub fn value(&self, q: f64, x: &[f64], w: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let n = self.cells;
        let h = q / n as f64;
        let bt = self.beta * self.t;
        let mut d = vec![0.0; n + 1];
        for i in (0..n).rev() {
            d[i] = d[i + 1] + h * x[i];
        }
        // Summation by parts, h x_c/(δ_cδ_{c+1}) = 1/δ_{c+1} − 1/δ_c, removes the
        // cancellation between the cell sum and −1/h.
        let mut kinetic = -1.0 / (bt * d[0]);
        for c in 0..n - 1 {
            kinetic += (1.0 - x[c]) * h / (bt * d[c] * d[c + 1]);
        }
        let disorder: f64 = -self.beta * self.beta * x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
        if let Some(g) = grad {
            let mut prefix = 0.0;
            for i in 0..n - 1 {
                // ∂/∂δ_i of the kinetic sum.
                let mut gd = 0.0;
                if i >= 1 {
                    gd -= (1.0 - x[i - 1]) * h / (d[i - 1] * d[i] * d[i]);
                } else {
                    gd += 1.0 / (d[0] * d[0]);
                }
                gd -= (1.0 - x[i]) * h / (d[i] * d[i] * d[i + 1]);
                prefix += gd / bt;
                let direct = -h / (bt * d[i] * d[i + 1]);
                g[i] = 0.5 * (direct + h * prefix - self.beta * self.beta * w[i]);
            }
            g[n - 1] = 0.0;
        }
        0.5 * (kinetic + disorder - self.beta * self.mu * q + 2.0 * (self.mu / self.t).sqrt())
    }

    /// `inf_x 𝒫(q, x)` from the warm start `x`, which is overwritten.
    ///
    /// Near the optimum the value changes by less than its rounding error
    /// while the CDF is still visibly off, so every decision is made from
    /// gradients: the step size by the Lipschitz test
    /// `⟨∇𝒫(z) − ∇𝒫(y), z − y⟩ ≤ L‖z − y‖²`, momentum restarts by the
    /// gradient criterion `⟨y − z, z − x⟩ > 0`, and termination by the
    /// sup-norm step `‖z − x‖_∞ < tol`.
    pub fn inner(&self, q: f64, x: &mut Vec<f64>, max_iter: usize, tol: f64) -> (f64, usize) {
        let n = self.cells;
        let w = self.disorder_weights(q);
        let mut lip = 1.0;
        let mut y = x.clone();
        let mut momentum = 1.0f64;
        let (mut gy, mut gz) = (vec![0.0; n], vec![0.0; n]);
        let mut z = vec![0.0; n];
        for it in 0..max_iter {
            self.value(q, &y, &w, Some(&mut gy));
            loop {
                for i in 0..n {
                    z[i] = y[i] - gy[i] / lip;
                }
                project(&mut z);
                self.value(q, &z, &w, Some(&mut gz));
                let (mut curv, mut norm) = (0.0, 0.0);
                for i in 0..n {
                    let d = z[i] - y[i];
                    curv += (gz[i] - gy[i]) * d;
                    norm += d * d;
                }
                if curv <= lip * norm {
                    break;
                }
                lip *= 2.0;
            }
            let step = (0..n).map(|i| (z[i] - x[i]).abs()).fold(0.0, f64::max);
            let restart: f64 = (0..n).map(|i| (y[i] - z[i]) * (z[i] - x[i])).sum();
            let next = if restart > 0.0 { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt()) };
            let beta = if restart > 0.0 { 0.0 } else { (momentum - 1.0) / next };
            for i in 0..n {
                y[i] = z[i] + beta * (z[i] - x[i]);
            }
            momentum = next;
            x.clone_from(&z);
            lip *= 0.9;
            if step < tol {
                return (self.value(q, x, &w, None), it + 1);
            }
        }
        (self.value(q, x, &w, None), max_iter)
    }

    /// `sup_{q ∈ [lo, hi]} inf_x 𝒫(q, x)` by golden section.
    pub fn solve(&self, lo: f64, hi: f64, q_tol: f64) -> BruteSolution {
        let n = self.cells;
        let mut x = vec![1.0; n];
        let mut iterations = 0;
        let mut probes = Vec::new();
        let mut eval = |q: f64, x: &mut Vec<f64>| {
            let (v, it) = self.inner(q, x, 400_000, 1e-12);
            iterations += it;
            probes.push((q, v));
            v
        };
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (lo, hi);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let mut fc = eval(c, &mut x);
        let mut fd = eval(d, &mut x);
        while b - a > q_tol {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = eval(c, &mut x);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = eval(d, &mut x);
            }
        }
        let q = 0.5 * (a + b);
        let value = eval(q, &mut x);
        BruteSolution { q, value, cdf: x, iterations, probes }
    }
}

/// Euclidean projection onto `{0 ≤ x_0 ≤ … ≤ x_{n−2} ≤ 1, x_{n−1} = 1}`:
/// isotonic regression by pool-adjacent-violators, then clipping.
fn project(x: &mut [f64]) {
    let n = x.len();
    let free = &mut x[..n - 1];
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(free.len());
    for &v in free.iter() {
        blocks.push((v, 1));
        while blocks.len() >= 2 {
            let (v2, c2) = blocks[blocks.len() - 1];
            let (v1, c1) = blocks[blocks.len() - 2];
            if v1 <= v2 {
                break;
            }
            blocks.pop();
            let last = blocks.last_mut().unwrap();
            *last = ((v1 * c1 as f64 + v2 * c2 as f64) / (c1 + c2) as f64, c1 + c2);
        }
    }
    let mut k = 0;
    for (v, c) in blocks {
        for _ in 0..c {
            free[k] = v.clamp(0.0, 1.0);
            k += 1;
        }
    }
    x[n - 1] = 1.0;
}
