use crate::error::{Error, Result};

use super::Family;

/// `g_inf(z) = 1/(1-z) - 1/2 + log(1-z)`.
pub fn g_infinity(z: f64) -> Result<f64> {
    check_open_interval(z)?;
    let om = 1.0 - z;
    Ok(1.0 / om - 0.5 + om.ln())
}

/// `g_k(z) = ((k+1)/2) log(k + (1+z)/(1-z)) + log(1-z)`.
///
/// For the isotropic student-t with `nu = k d` and `R = sqrt(d)`,
/// `log pi_S(z) = -d g_k(z) + const`. `k = inf` returns [`g_infinity`], which
/// agrees with `g_k` up to a `k`-dependent constant as `k` grows.
pub fn g_k(k: f64, z: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::domain(format!("g_k needs k > 0, got {k}")));
    }
    if k.is_infinite() {
        return g_infinity(z);
    }
    check_open_interval(z)?;
    let om = 1.0 - z;
    Ok(0.5 * (k + 1.0) * (k + (1.0 + z) / om).ln() + om.ln())
}

fn check_open_interval(z: f64) -> Result<()> {
    if z > -1.0 && z < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("latitude must lie in (-1, 1), got {z}")))
    }
}

/// The tabulated constant
/// `C_nu = (nu/(nu-2)) ((nu+1)/nu) ((nu+4)/(nu+3)) sqrt((nu+4)/nu)`.
///
/// This is not the roughness of the unit-variance student-t marginal, which is
/// `nu (nu+1) / ((nu+3)(nu-2))`; see [`super::Marginal::roughness`].
pub fn c_nu(nu: f64) -> Result<f64> {
    if !(nu > 2.0) {
        return Err(Error::domain(format!("C_nu needs nu > 2, got {nu}")));
    }
    Ok((nu / (nu - 2.0)) * ((nu + 1.0) / nu) * ((nu + 4.0) / (nu + 3.0)) * ((nu + 4.0) / nu).sqrt())
}

/// `C_nu / (C_nu - 1)`, the SPS over RWM efficiency gain.
pub fn c_nu_ratio(nu: f64) -> Result<f64> {
    let c = c_nu(nu)?;
    Ok(c / (c - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Sps,
    Sbps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErgodicityClass {
    UniformlyErgodic,
    NotGeometricallyErgodic,
    Unknown,
}

/// Closed-form classification for student-t targets.
///
/// SPS is uniformly ergodic iff `nu >= d`. SBPS is uniformly ergodic for
/// `nu > d - 1/2`; below that the answer is `Unknown` (the conjectured
/// threshold `nu > d - 1` is not encoded).
pub fn ergodicity_class(sampler: SamplerKind, family: &Family, dim: usize) -> Result<ErgodicityClass> {
    let nu = match family {
        Family::StudentT { nu, .. } => *nu,
        Family::Gaussian { .. } => return Err(Error::UnsupportedFamily("gaussian".into())),
        Family::ProductIid { .. } => return Err(Error::UnsupportedFamily("product_iid".into())),
    };
    let d = dim as f64;
    Ok(match sampler {
        SamplerKind::Sps if nu >= d => ErgodicityClass::UniformlyErgodic,
        SamplerKind::Sps => ErgodicityClass::NotGeometricallyErgodic,
        SamplerKind::Sbps if nu > d - 0.5 => ErgodicityClass::UniformlyErgodic,
        SamplerKind::Sbps => ErgodicityClass::Unknown,
    })
}
