//! Scalar root finding: Newton steps kept inside a sign-change bracket,
//! falling back to bisection whenever a step would leave it.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct RootOptions {
    /// Stop once `|f(x)| <= f_tol`.
    pub f_tol: f64,
    /// Stop once the bracket is narrower than `x_tol * (1 + |x|)`.
    pub x_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions { f_tol: 1e-12, x_tol: 1e-15, max_iter: 100 }
    }
}

/// Finds a root of `f` in `[lo, hi]` where `f(lo)` and `f(hi)` differ in sign.
///
/// `f` returns the value and derivative. `x0` is the first Newton iterate; it is
/// replaced by the midpoint when outside the bracket.
pub fn newton_bisect<F>(mut f: F, lo: f64, hi: f64, x0: f64, opts: RootOptions) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let fa = f(a).0;
    if fa == 0.0 {
        return Ok(a);
    }
    let fb = f(b).0;
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(Error::RootFinding(format!(
            "no sign change on [{a}, {b}]: f = ({fa}, {fb})"
        )));
    }
    let neg_at_a = fa < 0.0;

    let mut x = if x0 > a && x0 < b { x0 } else { 0.5 * (a + b) };
    let mut best = (f64::INFINITY, x);
    for _ in 0..opts.max_iter {
        let (fx, dfx) = f(x);
        if fx.abs() < best.0 {
            best = (fx.abs(), x);
        }
        if fx.abs() <= opts.f_tol {
            return Ok(x);
        }
        if (fx < 0.0) == neg_at_a {
            a = x;
        } else {
            b = x;
        }
        if b - a <= opts.x_tol * (1.0 + x.abs()) {
            return Ok(best.1);
        }
        let newton = x - fx / dfx;
        let width = b - a;
        x = if newton.is_finite() && newton > a && newton < b {
            newton
        } else {
            a + 0.5 * width
        };
    }
    if b - a <= 1e3 * opts.x_tol * (1.0 + best.1.abs()) {
        return Ok(best.1);
    }
    Err(Error::RootFinding(format!(
        "no convergence after {} iterations, bracket [{a}, {b}], best |f| = {}",
        opts.max_iter, best.0
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_root() {
        let f = |t: f64| (t * t * t / 4.0 + 2.0 * t - 4.0, 0.75 * t * t + 2.0);
        let r = newton_bisect(f, 0.0, 2.0, 2.0, RootOptions::default()).unwrap();
        assert!(f(r).0.abs() < 1e-12);
        assert!((r - 1.541834).abs() < 1e-6);
    }

    #[test]
    fn bad_derivative_still_converges() {
        // Derivative deliberately wrong; bisection must carry the iteration.
        let f = |x: f64| (x.powi(3) - 2.0, 1e-30);
        let opts = RootOptions { max_iter: 200, ..Default::default() };
        let r = newton_bisect(f, 0.0, 2.0, 1.0, opts).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn requires_sign_change() {
        assert!(newton_bisect(|x| (x * x + 1.0, 2.0 * x), -1.0, 1.0, 0.0, RootOptions::default()).is_err());
    }
}
