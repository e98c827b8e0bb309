//! Small numerical building blocks: Gauss–Legendre quadrature (fixed and
//! adaptive), bracketed bisection and golden-section maximisation.
//!
//! Quadrature nodes come from the `gauss-quad` crate; the adaptive driver and
//! the scalar root finders are kept here because they need the crate's error
//! type and iteration caps.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Number of Gauss–Legendre nodes per panel.
const PANEL_NODES: usize = 20;
/// Upper bound on the number of panels the adaptive driver may create.
const MAX_PANELS: usize = 200_000;

fn legendre_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = NonZeroUsize::new(PANEL_NODES).expect("nonzero node count");
        GaussLegendre::new(n).iter().map(|(x, w)| (*x, *w)).collect()
    })
}

/// Fixed-order Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    legendre_rule().iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Adaptive composite Gauss–Legendre quadrature on `[a, b]`.
///
/// A panel is accepted when the single-panel estimate and the sum of its two
/// halves agree to within its share of `abs_tol` (or `rel_tol` of the running
/// magnitude). Returns the integral; fails with [`Error::NonConvergence`] when
/// the panel budget is exhausted, reporting the accumulated error estimate.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let width = hi - lo;
    let mut stack = vec![(lo, hi, gauss_legendre(&mut f, lo, hi))];
    let mut total = 0.0;
    let mut err_total = 0.0;
    let mut panels = 0usize;
    while let Some((l, h, whole)) = stack.pop() {
        let m = 0.5 * (l + h);
        let left = gauss_legendre(&mut f, l, m);
        let right = gauss_legendre(&mut f, m, h);
        let refined = left + right;
        let err = (refined - whole).abs();
        let share = (h - l) / width;
        let tol = (abs_tol * share).max(rel_tol * refined.abs());
        panels += 1;
        if err <= tol || (h - l) <= width * 1e-14 {
            total += refined;
            err_total += err;
        } else if panels > MAX_PANELS {
            return Err(Error::NonConvergence {
                what: "adaptive Gauss-Legendre quadrature".into(),
                residual: err_total + err,
            });
        } else {
            stack.push((m, h, right));
            stack.push((l, m, left));
        }
        if !refined.is_finite() {
            return Err(Error::NonConvergence {
                what: "adaptive Gauss-Legendre quadrature (non-finite integrand)".into(),
                residual: f64::INFINITY,
            });
        }
    }
    Ok(sign * total)
}

/// Bracketed bisection for a root of `f` in `[lo, hi]`.
///
/// Terminates when the bracket width is below `rel_tol` times its midpoint
/// magnitude (or when an exact zero is hit). Fails if the endpoints do not
/// bracket a sign change or after `max_iter` halvings.
pub fn bisect<F: FnMut(f64) -> f64>(f: F, lo: f64, hi: f64, rel_tol: f64, max_iter: usize) -> Result<f64> {
    bisect_until(f, lo, hi, |a, b| (b - a).abs() <= rel_tol * (0.5 * (a + b)).abs(), max_iter)
}

/// Bisection in `ln x` for a root of `f` on `[lo, hi] ⊂ (0, ∞)`; terminates at
/// relative width `rel_tol` in `x`.
pub fn bisect_log<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, rel_tol: f64, max_iter: usize) -> Result<f64> {
    bisect_until(|y| f(y.exp()), lo.ln(), hi.ln(), |a, b| (b - a).abs() <= rel_tol, max_iter).map(f64::exp)
}

fn bisect_until<F, D>(mut f: F, mut lo: f64, mut hi: f64, done: D, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
    D: Fn(f64, f64) -> bool,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(Error::Domain(format!(
            "bisection endpoints [{lo:e}, {hi:e}] do not bracket a root (f = {flo:e}, {fhi:e})"
        )));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if done(lo, hi) || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence { what: "bracketed bisection".into(), residual: (hi - lo).abs() })
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
///
/// Returns `(argmax, max)`; the endpoints are included in the comparison.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let fa0 = f(a);
    let fb0 = f(b);
    let (a0, b0) = (a, b);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    let (mut xbest, mut fbest) = if fc > fd { (c, fc) } else { (d, fd) };
    if fa0 > fbest {
        xbest = a0;
        fbest = fa0;
    }
    if fb0 > fbest {
        xbest = b0;
        fbest = fb0;
    }
    (xbest, fbest)
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// `n` linearly spaced points from `lo` to `hi` inclusive.
pub fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptive_integrates_smooth_and_peaked_functions() {
        let v = integrate(|x| x.exp(), 0.0, 1.0, 1e-13, 1e-14).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-13);
        let v = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10, 1e-13).unwrap();
        let exact = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert!((v - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let v = integrate(|x| x * x, 1.0, 0.0, 1e-14, 1e-14).unwrap();
        assert!((v + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bisection_finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-15, 200).is_err());
    }

    #[test]
    fn golden_section_locates_interior_maximum() {
        let (x, fx) = golden_max(|x| -(x - 0.3).powi(2), 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
        assert!(fx.abs() < 1e-12);
    }
}
