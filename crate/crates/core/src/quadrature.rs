//! Adaptive Simpson quadrature.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("adaptive Simpson did not converge on [{a}, {b}] (estimate {estimate})")]
pub struct QuadratureError {
    pub a: f64,
    pub b: f64,
    pub estimate: f64,
}

const MAX_DEPTH: u32 = 50;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut ok = true;
    let estimate = recurse(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut ok);
    if ok && estimate.is_finite() {
        Ok(estimate)
    } else {
        Err(QuadratureError { a, b, estimate })
    }
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    ok: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 {
        *ok = false;
        return left + right;
    }
    if delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, ok)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 0.0).abs() < 1e-12);
    }

    #[test]
    fn exponential() {
        let v = adaptive_simpson(f64::exp, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn reversed_bounds_are_negative() {
        let v = adaptive_simpson(|_| 1.0, 1.0, 0.0, 1e-12).unwrap();
        assert!((v + 1.0).abs() < 1e-15);
    }
}
