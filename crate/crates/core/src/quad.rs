//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 50;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::param(format!("invalid integration interval [{a}, {b}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::param(format!("quadrature tolerance must be positive, got {tol}")));
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let value = refine(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::param("integrand is not finite on the interval"))
    }
}

#[allow(clippy::too_many_arguments)]
fn refine(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
