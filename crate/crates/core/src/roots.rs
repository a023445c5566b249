//! Scalar root finding for monotone node equations.

use crate::error::{Result, SimError};

/// Tolerances for [`solve_decreasing`].
#[derive(Debug, Clone, Copy)]
pub struct RootTolerance {
    /// Absolute tolerance on the residual.
    pub abs_residual: f64,
    /// Relative tolerance on the residual, scaled by `residual_scale`.
    pub rel_residual: f64,
    /// Stop when the bracket is narrower than this (absolute, in x units).
    pub x_tol: f64,
    pub max_iter: usize,
}

impl Default for RootTolerance {
    fn default() -> Self {
        RootTolerance {
            abs_residual: 1e-15,
            rel_residual: 1e-12,
            x_tol: 1e-15,
            max_iter: 400,
        }
    }
}

/// Finds the root of a strictly decreasing function on `[lo, hi]`.
///
/// `f` returns `(value, derivative)`. Newton steps are taken when they stay
/// inside the current bracket, otherwise the bracket is bisected, so
/// convergence is guaranteed whenever `f(lo) >= 0 >= f(hi)`.
///
/// `residual_scale` sets the magnitude the relative residual is measured
/// against (e.g. the source current).
pub fn solve_decreasing<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    residual_scale: f64,
    tol: RootTolerance,
) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (f_lo, _) = f(lo);
    let (f_hi, _) = f(hi);
    if f_lo.is_nan() || f_hi.is_nan() {
        return Err(SimError::numerical(format!(
            "NaN at bracket ends [{lo:e}, {hi:e}]"
        )));
    }
    let done = |r: f64| {
        r.abs()
            <= tol
                .abs_residual
                .max(tol.rel_residual * residual_scale.abs())
    };
    if done(f_lo) {
        return Ok(lo);
    }
    if done(f_hi) {
        return Ok(hi);
    }
    if f_lo < 0.0 || f_hi > 0.0 {
        return Err(SimError::numerical(format!(
            "root not bracketed: f({lo:e}) = {f_lo:e}, f({hi:e}) = {f_hi:e}"
        )));
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..tol.max_iter {
        let (fx, dfx) = f(x);
        if fx.is_nan() {
            return Err(SimError::numerical(format!(
                "NaN during root search, bracket [{lo:e}, {hi:e}]"
            )));
        }
        if done(fx) {
            return Ok(x);
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= tol.x_tol.max(4.0 * f64::EPSILON * x.abs()) {
            return Ok(x);
        }
        let newton = if dfx < 0.0 { x - fx / dfx } else { f64::NAN };
        x = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(SimError::numerical(format!(
        "root search did not converge, bracket [{lo:e}, {hi:e}]"
    )))
}

/// Maximises a unimodal function of one variable with golden-section search.
/// Returns `(argmax, max)`.
pub fn golden_max<F>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo).abs() > x_tol {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    (x, fx)
}
