//! Deterministic functions of the mean degree `t`: the survival probability
//! of the giant component, its dual parameter, the scale and clock of the
//! limiting Gaussian process, its covariance kernel and the coefficients of
//! the linear SDE it solves.
//!
//! Everything here is a pure function and can be called from any thread.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Largest residual accepted from the survival-equation solver.
pub const RHO_RESIDUAL_TOL: f64 = 1e-13;

const NEWTON_MAX_ITERS: usize = 64;

/// Every deterministic function of `t` used by the fluctuation limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingBundle {
    pub t: f64,
    /// Survival probability, root in (0,1) of `1 - x = exp(-t x)`.
    pub rho: f64,
    /// Dual parameter `t (1 - rho)`, always in (0,1).
    pub lambda: f64,
    /// Scale factor `1/(1 - rho) - t`.
    pub u: f64,
    /// Brownian clock `1/(1 - rho) - 1`.
    pub v: f64,
    /// Limiting variance of the rescaled giant component.
    pub sigma2: f64,
    pub rho_prime: f64,
}

/// Drift and diffusion rate of the limiting SDE at `(t, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeCoefficients {
    pub drift: f64,
    pub diffusion: f64,
}

fn survival_residual(t: f64, x: f64) -> f64 {
    1.0 - x - (-t * x).exp()
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(domain(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    Ok(())
}

fn check_supercritical(t: f64) -> Result<()> {
    check_time(t)?;
    if t <= 1.0 {
        return Err(domain(format!("time must exceed 1, got {t}")));
    }
    Ok(())
}

/// Survival probability: the root in (0,1) of `1 - x = exp(-t x)` for
/// `t > 1`, and `0` for `t <= 1`.
pub fn rho(t: f64) -> Result<f64> {
    check_time(t)?;
    if t <= 1.0 {
        return Ok(0.0);
    }
    if let Some(x) = rho_newton(t) {
        return Ok(x);
    }
    Ok(rho_bisect(t))
}

fn rho_newton(t: f64) -> Option<f64> {
    let mut x = 1.0 - 1.0 / t;
    for _ in 0..NEWTON_MAX_ITERS {
        let e = (-t * x).exp();
        let f = 1.0 - x - e;
        let fp = t * e - 1.0;
        if fp == 0.0 {
            return None;
        }
        let next = x - f / fp;
        if !(next > 0.0 && next < 1.0) {
            return None;
        }
        let step = (next - x).abs();
        x = next;
        if step <= 4.0 * f64::EPSILON * x {
            break;
        }
    }
    (survival_residual(t, x).abs() <= RHO_RESIDUAL_TOL).then_some(x)
}

fn rho_bisect(t: f64) -> f64 {
    // residual is positive just above 0 and negative at 1
    let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if survival_residual(t, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `1 - rho(t)` with full relative precision, also for large `t` where the
/// subtraction `1 - rho` would cancel.
pub fn extinction_probability(t: f64) -> Result<f64> {
    let r = rho(t)?;
    if t <= 1.0 {
        return Ok(1.0);
    }
    // Newton on ln q + t (1 - q) = 0, seeded from the survival root.
    let mut q = 1.0 - r;
    for _ in 0..8 {
        let g = q.ln() + t * (1.0 - q);
        let gp = 1.0 / q - t;
        let next = q - g / gp;
        if !(next > 0.0 && next < 1.0) {
            break;
        }
        let done = (next - q).abs() <= 2.0 * f64::EPSILON * q;
        q = next;
        if done {
            break;
        }
    }
    Ok(q)
}

/// Evaluates the whole [`ScalingBundle`] at `t > 1`.
pub fn scaling(t: f64) -> Result<ScalingBundle> {
    check_supercritical(t)?;
    let q = extinction_probability(t)?;
    let rho = 1.0 - q;
    let lambda = t * q;
    let u = (1.0 - lambda) / q;
    let v = rho / q;
    let one_minus_lambda = 1.0 - lambda;
    Ok(ScalingBundle {
        t,
        rho,
        lambda,
        u,
        v,
        sigma2: rho * q / (one_minus_lambda * one_minus_lambda),
        rho_prime: rho * q / one_minus_lambda,
    })
}

/// Inverse of the clock `v` on `(1, inf)`.
pub fn v_inverse(s: f64) -> Result<f64> {
    if !s.is_finite() || s <= 0.0 {
        return Err(domain(format!(
            "transformed time must be positive and finite, got {s}"
        )));
    }
    let mut hi = 2.0;
    while scaling(hi)?.v < s {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(domain(format!("transformed time {s} out of range")));
        }
    }
    let mut lo = 1.0;
    // v is strictly increasing: bisect down to adjacent doubles
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if scaling(mid)?.v < s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo <= 1.0 {
        return Ok(hi);
    }
    let (vlo, vhi) = (scaling(lo)?.v, scaling(hi)?.v);
    Ok(if (vlo - s).abs() < (vhi - s).abs() {
        lo
    } else {
        hi
    })
}

/// Covariance kernel `v(s ^ t) / (u(s) u(t))` of the limiting process.
pub fn cov_kernel(s: f64, t: f64) -> Result<f64> {
    let a = scaling(s)?;
    let b = scaling(t)?;
    let v_min = if s <= t { a.v } else { b.v };
    Ok(v_min / (a.u * b.u))
}

pub fn sde_coefficients(t: f64, x: f64) -> Result<SdeCoefficients> {
    if !x.is_finite() {
        return Err(domain(format!("state must be finite, got {x}")));
    }
    let sc = scaling(t)?;
    Ok(coefficients_from(&sc, x))
}

pub(crate) fn coefficients_from(sc: &ScalingBundle, x: f64) -> SdeCoefficients {
    let q = sc.lambda / sc.t;
    let oml = 1.0 - sc.lambda;
    let rate = (1.0 - 2.0 * sc.rho) / oml - sc.rho * q * sc.t / (oml * oml);
    SdeCoefficients {
        drift: rate * x,
        diffusion: sc.rho * q / (oml * oml * oml),
    }
}
