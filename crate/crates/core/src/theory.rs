//! Closed-form scaling theory for SPS.
//!
//! Symbols: `ell` is the rescaled step with `1/sqrt(1 + h^2 (d-1)) = 1 - ell^2/(2d)`,
//! `lambda = R^2 / d`, and `E = E_f[((log f)')^2]` is the roughness of the
//! product marginal.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Acceptance rate at the optimum of the ESJD limit.
pub const OPTIMAL_ACCEPTANCE: f64 = 0.234;
/// `ell_hat sqrt(E - 1)` at the optimum.
pub const OPTIMAL_ELL_CONSTANT: f64 = 2.38;
/// `max ESJD * (E - 1)`.
pub const MAX_ESJD_CONSTANT: f64 = 1.3;

/// Step size used for the Gaussian (`E = 1`) target, where the ESJD theory
/// does not apply. At `h = 1` the latitude contracts by `1/sqrt(1 + (d-1))`
/// per proposal and the acceptance rate sits at its large-`h` floor.
pub const LARGE_STEP_H: f64 = 1.0;

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `log Phi(x)`, with the Mills-ratio expansion in the far left tail.
fn ln_std_normal_cdf(x: f64) -> f64 {
    if x > -30.0 {
        std_normal_cdf(x).ln()
    } else {
        let x2 = x * x;
        -0.5 * x2 - (-x).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatitudeApprox {
    /// `(z + sqrt(1 - z^2) h u) / sqrt(1 + h^2 d)`
    GeneralH,
    /// `[(1 - h^2 u^2 / 2) z - sqrt(1 - z^2) h u] / sqrt(1 + h^2 (d-1))`
    Coordinate,
    /// `(1 - h^2 u^2 / 2) z / sqrt(1 + h^2 (d-1))`
    Transient,
    /// `(z - h u) / sqrt(1 + h^2 (d-1))`
    Stationary,
}

/// Leading-order proposal latitude from latitude `z` given a standard-normal `u`.
pub fn latitude_approx(kind: LatitudeApprox, z: f64, h: f64, d: usize, u: f64) -> Result<f64> {
    if !(z.abs() < 1.0) {
        return Err(Error::domain(format!("latitude must lie in (-1, 1), got {z}")));
    }
    if !(h > 0.0) {
        return Err(Error::domain(format!("step must be positive, got {h}")));
    }
    if d < 1 {
        return Err(Error::domain("dimension must be positive"));
    }
    let d = d as f64;
    let c = (1.0 + h * h * (d - 1.0)).sqrt();
    let s = (1.0 - z * z).sqrt();
    Ok(match kind {
        LatitudeApprox::GeneralH => (z + s * h * u) / (1.0 + h * h * d).sqrt(),
        LatitudeApprox::Coordinate => ((1.0 - 0.5 * h * h * u * u) * z - s * h * u) / c,
        LatitudeApprox::Transient => (1.0 - 0.5 * h * h * u * u) * z / c,
        LatitudeApprox::Stationary => (z - h * u) / c,
    })
}

/// Limiting mean and variance of the stationary log acceptance ratio:
/// `mu = (ell^2/2)(4 lambda/(1+lambda)^2 - E)`, `sigma^2 = ell^2 (E - 4 lambda/(1+lambda)^2)`.
pub fn clt_mean_var(ell: f64, lambda: f64, e: f64) -> Result<(f64, f64)> {
    if !(ell > 0.0) || !(lambda > 0.0) || !(e >= 1.0) {
        return Err(Error::domain(format!(
            "need ell > 0, lambda > 0, E >= 1; got ({ell}, {lambda}, {e})"
        )));
    }
    if lambda == 1.0 && e == 1.0 {
        return Err(Error::DegenerateCase(
            "lambda = 1 with a Gaussian marginal has no CLT limit".into(),
        ));
    }
    let a = 4.0 * lambda / ((1.0 + lambda) * (1.0 + lambda));
    let var = ell * ell * (e - a);
    Ok((-0.5 * var, var))
}

/// `E[1 ^ e^W]` for `W ~ N(mu, sigma^2)`:
/// `Phi(mu/sigma) + e^{mu + sigma^2/2} Phi(-sigma - mu/sigma)`.
pub fn expected_accept(mu: f64, sigma: f64) -> f64 {
    assert!(sigma >= 0.0, "sigma must be nonnegative");
    if sigma == 0.0 {
        return mu.exp().min(1.0);
    }
    let first = std_normal_cdf(mu / sigma);
    let second = (mu + 0.5 * sigma * sigma + ln_std_normal_cdf(-sigma - mu / sigma)).exp();
    (first + second).min(1.0)
}

/// Stationary specialization `2 Phi(-sigma/2)`.
pub fn expected_accept_stationary(sigma: f64) -> f64 {
    2.0 * std_normal_cdf(-0.5 * sigma)
}

/// `2 ell^2 Phi(-(ell/2) sqrt(E - 1))`.
pub fn esjd_limit(ell: f64, e: f64) -> Result<f64> {
    if !(e > 1.0) {
        return Err(Error::domain(format!(
            "ESJD limit needs roughness E > 1 (the Gaussian marginal is excluded), got {e}"
        )));
    }
    if !(ell >= 0.0) {
        return Err(Error::domain(format!("ell must be nonnegative, got {ell}")));
    }
    Ok(2.0 * ell * ell * std_normal_cdf(-0.5 * ell * (e - 1.0).sqrt()))
}

/// Speed measure of the limiting Langevin diffusion; equal to [`esjd_limit`].
pub fn diffusion_speed(ell: f64, e: f64) -> Result<f64> {
    esjd_limit(ell, e)
}

fn check_d(d: usize) -> Result<f64> {
    if d < 2 {
        Err(Error::domain(format!("need d >= 2, got {d}")))
    } else {
        Ok(d as f64)
    }
}

/// Solves `1/sqrt(1 + h^2 (d-1)) = 1 - ell^2/(2d)` for `h`.
pub fn h_from_ell(ell: f64, d: usize) -> Result<f64> {
    let df = check_d(d)?;
    if !(ell > 0.0) || !(ell * ell < 2.0 * df) {
        return Err(Error::domain(format!("need 0 < ell^2 < 2d, got ell = {ell}, d = {d}")));
    }
    let one_minus_a = ell * ell / (2.0 * df);
    let a = 1.0 - one_minus_a;
    Ok((one_minus_a * (1.0 + a)).sqrt() / a / (df - 1.0).sqrt())
}

/// Inverse of [`h_from_ell`].
pub fn ell_from_h(h: f64, d: usize) -> Result<f64> {
    let df = check_d(d)?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::domain(format!("need h > 0, got {h}")));
    }
    let s = h * h * (df - 1.0);
    let r = (1.0 + s).sqrt();
    let one_minus_a = s / (r * (1.0 + r));
    Ok((2.0 * df * one_minus_a).sqrt())
}

/// Golden-section maximizer of a unimodal function on `[lo, hi]`.
fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > 1e-12 * (1.0 + hi.abs()) {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        }
    }
    0.5 * (lo + hi)
}

/// Numeric argmax of [`esjd_limit`] over `ell` in `(0, sqrt(2d))`.
pub fn esjd_argmax(e: f64, d: usize) -> Result<f64> {
    let df = check_d(d)?;
    esjd_limit(0.0, e)?;
    Ok(golden_max(|l| esjd_limit(l, e).unwrap_or(0.0), 0.0, (2.0 * df).sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningReport {
    pub dim: usize,
    pub ell: f64,
    pub h: f64,
    pub lambda: f64,
    pub roughness: f64,
    pub predicted_acceptance: f64,
    pub predicted_esjd: f64,
    pub diffusion_speed: f64,
    /// Exact argmax of the ESJD limit, next to the rounded `2.38` rule.
    pub ell_numeric: f64,
    pub esjd_max_numeric: f64,
}

/// `ell_hat = 2.38 / sqrt(E - 1)` and the matching `h_hat` at `R = sqrt(d)`.
pub fn optimal_tuning(e: f64, d: usize) -> Result<TuningReport> {
    if !(e > 1.0) {
        return Err(Error::domain(format!(
            "optimal tuning needs roughness E > 1; E = {e} (a Gaussian marginal has E = 1 and no interior optimum)"
        )));
    }
    let ell = OPTIMAL_ELL_CONSTANT / (e - 1.0).sqrt();
    let h = h_from_ell(ell, d)?;
    let ell_numeric = esjd_argmax(e, d)?;
    Ok(TuningReport {
        dim: d,
        ell,
        h,
        lambda: 1.0,
        roughness: e,
        predicted_acceptance: expected_accept_stationary(ell * (e - 1.0).sqrt()),
        predicted_esjd: esjd_limit(ell, e)?,
        diffusion_speed: diffusion_speed(ell, e)?,
        ell_numeric,
        esjd_max_numeric: esjd_limit(ell_numeric, e)?,
    })
}
