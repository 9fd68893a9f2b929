//! The ℓp proximal operator and the ℓ2-ball projection used by each SGD step.
//!
//! For `1 < p ≤ 2` the proximal map of `λ‖w‖_p^p` separates over coordinates.
//! Coordinate `j` keeps the sign of `v_j` and its magnitude `u` solves
//!
//! ```text
//! u + λ p u^{p-1} = |v_j|,   0 ≤ u ≤ min{|v_j|, (|v_j| / (λp))^{1/(p-1)}}
//! ```
//!
//! which has no closed form except at `p = 2`. It is solved by a safeguarded
//! Newton iteration that falls back to bisection whenever Newton would leave
//! the current bracket or stalls.

use ndarray::{Array1, ArrayView1, ArrayViewMut1};

use crate::error::{Error, Result};

/// Default absolute tolerance of the scalar solve.
pub const DEFAULT_PROX_TOL: f64 = 1e-12;

const MAX_ITER: usize = 400;

/// Upper end of the bracket for the magnitude, from the contraction bound.
pub fn contraction_bound(v_abs: f64, lam: f64, p: f64) -> f64 {
    let shrink = (v_abs / (lam * p)).powf(1.0 / (p - 1.0));
    v_abs.min(shrink)
}

fn check_args(lam: f64, p: f64, tol: f64) -> Result<()> {
    if !(lam > 0.0) || !lam.is_finite() {
        return Err(Error::input(format!("prox scale must be positive, got {lam}")));
    }
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::input(format!("p must lie in (1,2], got {p}")));
    }
    if !(tol > 0.0) {
        return Err(Error::input("prox tolerance must be positive"));
    }
    Ok(())
}

/// Proximal map of `λ|w|^p` at a scalar `v`.
pub fn prox_scalar(v: f64, lam: f64, p: f64, tol: f64) -> Result<f64> {
    check_args(lam, p, tol)?;
    prox_scalar_unchecked(v, lam, p, tol)
}

fn prox_scalar_unchecked(v: f64, lam: f64, p: f64, tol: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::Numerical(format!("non-finite prox input {v}")));
    }
    let a = v.abs();
    if a == 0.0 {
        return Ok(0.0);
    }
    let c = lam * p;
    let phi = |u: f64| u + c * u.powf(p - 1.0) - a;
    let dphi = |u: f64| 1.0 + c * (p - 1.0) * u.powf(p - 2.0);

    let mut lo = 0.0;
    let mut hi = contraction_bound(a, lam, p);
    if hi == 0.0 {
        // The root is below the smallest positive double.
        return Ok(0.0);
    }
    // phi(hi) >= 0 by construction; an exact zero ends the search.
    if phi(hi) <= 0.0 {
        return Ok(v.signum() * hi);
    }
    let mut x = 0.5 * hi;
    let mut last_step = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let f = phi(x);
        if f == 0.0 {
            return Ok(v.signum() * x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - f / dphi(x);
        if newton > lo && newton < hi {
            let step = (newton - x).abs();
            if step <= tol {
                return Ok(v.signum() * newton);
            }
            // Newton must at least halve the previous step to be kept.
            if step <= 0.5 * last_step {
                last_step = step;
                x = newton;
                continue;
            }
        }
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol {
            return Ok(v.signum() * if mid > 0.0 { mid } else { hi });
        }
        last_step = (mid - x).abs();
        x = mid;
    }
    Err(Error::Numerical(format!(
        "prox solve for v={v}, lam={lam}, p={p} did not converge"
    )))
}

/// Coordinatewise `Pro_{λ,p}(v) = argmin_w ½‖w - v‖² + λ‖w‖_p^p`.
pub fn prox_lp(v: ArrayView1<f64>, lam: f64, p: f64, tol: f64) -> Result<Array1<f64>> {
    let mut out = v.to_owned();
    prox_lp_inplace(out.view_mut(), lam, p, tol)?;
    Ok(out)
}

pub fn prox_lp_inplace(mut v: ArrayViewMut1<f64>, lam: f64, p: f64, tol: f64) -> Result<()> {
    check_args(lam, p, tol)?;
    for x in v.iter_mut() {
        *x = prox_scalar_unchecked(*x, lam, p, tol)?;
    }
    Ok(())
}

/// Euclidean projection onto `{w : ‖w‖₂ ≤ radius}`.
///
/// The result's computed norm never exceeds `radius`.
pub fn project_ball(v: ArrayView1<f64>, radius: f64) -> Array1<f64> {
    let mut out = v.to_owned();
    project_ball_inplace(out.view_mut(), radius);
    out
}

pub fn project_ball_inplace(mut v: ArrayViewMut1<f64>, radius: f64) {
    let radius = radius.max(0.0);
    let norm = v.dot(&v).sqrt();
    if norm <= radius {
        return;
    }
    if radius == 0.0 {
        v.fill(0.0);
        return;
    }
    let mut scale = radius / norm;
    let orig = v.to_owned();
    loop {
        v.zip_mut_with(&orig, |x, &o| *x = o * scale);
        if v.dot(&v).sqrt() <= radius {
            return;
        }
        scale *= 1.0 - f64::EPSILON;
    }
}
