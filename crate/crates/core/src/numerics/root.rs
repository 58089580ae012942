use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

const MAX_STEPS: usize = 400;

/// Root of a non-increasing function on a bracket with f(lo) ≥ 0 ≥ f(hi).
///
/// Newton steps are taken from `start` whenever they stay strictly inside the
/// current bracket and shrink it fast enough; otherwise the step is a
/// bisection. Terminates when the bracket is a few ulps wide.
pub fn solve_decreasing<F, D>(f: F, slope_magnitude: D, bracket: Bracket, start: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
    D: Fn(f64) -> f64,
{
    let Bracket { mut lo, mut hi } = bracket;
    let mut x = if start > lo && start < hi { start } else { 0.5 * (lo + hi) };
    let mut last_residual = f64::INFINITY;
    for _ in 0..MAX_STEPS {
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return Ok(0.5 * (lo + hi));
        }
        let slope = slope_magnitude(x);
        let newton = x + fx / slope;
        // Newton only while it stays inside the bracket and the residual halves
        let next = if newton > lo && newton < hi && fx.abs() < 0.5 * last_residual { newton } else { 0.5 * (lo + hi) };
        last_residual = fx.abs();
        if next == x {
            return Ok(x);
        }
        x = next;
    }
    Err(Error::Convergence("safeguarded Newton root search"))
}

/// Plain bisection for a non-decreasing function with a target value.
pub fn bisect_increasing<F>(f: F, target: f64, mut lo: f64, mut hi: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

const GOLDEN_STEPS: usize = 200;

/// Minimum value of a unimodal function on [a, b] by golden-section search.
pub(crate) fn golden_minimum(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_STEPS {
        if b - a <= 1e-14 * (1.0 + a.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd).min(f(0.5 * (a + b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_root_of_exponential_tail() {
        let p = 0.01f64;
        let root = solve_decreasing(
            |t| Ok((-t / 2.0).exp() - p),
            |t| 0.5 * (-t / 2.0).exp(),
            Bracket { lo: 0.0, hi: 200.0 },
            1.0,
        )
        .unwrap();
        assert!((root - (-2.0 * p.ln())).abs() < 1e-12);
    }

    #[test]
    fn bisection_without_derivative() {
        let root = solve_decreasing(|t| Ok(1.0 - t * t * t), |_| f64::NAN, Bracket { lo: 0.0, hi: 3.0 }, 2.9).unwrap();
        assert!((root - 1.0).abs() < 1e-14);
    }

    #[test]
    fn increasing_bisection() {
        let x = bisect_increasing(|x| 3.0 * x * x - 2.0 * x * x * x, 0.5, 0.0, 1.0, 1e-15);
        assert!((x - 0.5).abs() < 1e-14);
    }
}
