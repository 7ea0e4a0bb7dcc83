//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

/// Deepest bisection level; at most `2^MAX_DEPTH` panels per interval.
pub const MAX_DEPTH: u32 = 14;

/// Integrates `f` over `[a, b]` to relative tolerance `rel_tol` (with an
/// absolute floor of `rel_tol * 1e-3`).
///
/// Panels that reach [`MAX_DEPTH`] without meeting their local tolerance are
/// accepted, but their error estimates are summed; if that sum exceeds the
/// global tolerance the integral is reported as a failure.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let tol = rel_tol * whole.abs().max(1e-3);
    let mut unresolved = 0.0;
    let value = recurse(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut unresolved);
    if !value.is_finite() {
        return Err(Error::QuadratureFailure {
            a,
            b,
            error: f64::INFINITY,
        });
    }
    if unresolved > rel_tol * value.abs().max(1e-3) {
        return Err(Error::QuadratureFailure {
            a,
            b,
            error: unresolved,
        });
    }
    Ok(value)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    unresolved: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *unresolved += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, unresolved)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, unresolved)
}
