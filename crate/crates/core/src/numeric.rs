//! Scalar root finding and one-dimensional quadrature.

use crate::error::{Error, Result};

/// Bracketed root of `f` on `[a, b]`.
///
/// Bisection steps alternate with secant steps taken from the current
/// bracket, so the bracket at least halves every two iterations while the
/// secant steps give superlinear convergence near a simple root. Iteration
/// stops when the bracket is narrower than `xtol` or can no longer shrink
/// in floating point.
pub fn bracketed_root<F>(f: F, a: f64, b: f64, xtol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return Err(Error::NoBracket {
            a: lo,
            b: hi,
            fa: flo,
            fb: fhi,
        });
    }

    let mut secant = false;
    for _ in 0..400 {
        let width = hi - lo;
        let mid = lo + 0.5 * width;
        if width <= xtol || mid <= lo || mid >= hi {
            break;
        }
        let mut x = mid;
        if secant {
            let s = hi - fhi * (hi - lo) / (fhi - flo);
            // keep the secant point away from the endpoints
            let guard = 1e-3 * width;
            if s.is_finite() && s > lo + guard && s < hi - guard {
                x = s;
            }
        }
        secant = !secant;

        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
    }
    Ok(if flo.abs() <= fhi.abs() { lo } else { hi })
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut ok = true;
    let value = simpson_step(&f, a, b, fa, fm, fb, whole, tol, 48, &mut ok);
    if ok && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Quadrature { a, b, tol })
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    ok: &mut bool,
) -> f64
where
    F: Fn(f64) -> f64,
{
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
    if depth == 0 || lm <= a || rm >= b {
        *ok = false;
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, ok)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, ok)
}

/// Ordinary least-squares line `y = slope * x + intercept` with coefficient
/// of determination.
pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 1e-12 * n {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    Some((slope, intercept, r2))
}
