//! Target distributions and the closed-form family quantities.
//!
//! All log-densities are normalized. Covariances are carried in the
//! eigendecomposed form `Sigma = Q diag(lambda) Q^T`.

mod closed_form;
mod marginal;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand_distr::{ChiSquared, Distribution};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::geometry::{orthogonality_defect, ORTHOGONALITY_TOL};
use crate::rng::RngStream;

pub use closed_form::{c_nu, c_nu_ratio, ergodicity_class, g_infinity, g_k, ErgodicityClass, SamplerKind};
pub use marginal::Marginal;

/// `Sigma = Q diag(lambda) Q^T`; `rotation = None` means `Q = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scale {
    lambda: Vec<f64>,
    rotation: Option<DMatrix<f64>>,
}

impl Scale {
    pub fn identity(dim: usize) -> Self {
        Self {
            lambda: vec![1.0; dim],
            rotation: None,
        }
    }

    pub fn diagonal(lambda: Vec<f64>) -> Result<Self> {
        check_spectrum(&lambda)?;
        Ok(Self { lambda, rotation: None })
    }

    pub fn rotated(lambda: Vec<f64>, rotation: DMatrix<f64>) -> Result<Self> {
        check_spectrum(&lambda)?;
        let d = lambda.len();
        if rotation.nrows() != d || rotation.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: rotation.nrows(),
            });
        }
        let defect = orthogonality_defect(&rotation);
        if defect > ORTHOGONALITY_TOL {
            return Err(Error::InvalidConfig(format!(
                "rotation is not orthogonal: |Q^T Q - I|_max = {defect:e}"
            )));
        }
        Ok(Self {
            lambda,
            rotation: Some(rotation),
        })
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn rotation(&self) -> Option<&DMatrix<f64>> {
        self.rotation.as_ref()
    }

    pub fn rotation_matrix(&self) -> DMatrix<f64> {
        self.rotation
            .clone()
            .unwrap_or_else(|| DMatrix::identity(self.dim(), self.dim()))
    }

    pub fn is_identity(&self) -> bool {
        self.rotation.is_none() && self.lambda.iter().all(|l| *l == 1.0)
    }

    fn log_det(&self) -> f64 {
        self.lambda.iter().map(|l| l.ln()).sum()
    }

    /// `Q^T x`.
    fn rotate_t(&self, x: &[f64]) -> Vec<f64> {
        match &self.rotation {
            None => x.to_vec(),
            Some(q) => {
                let d = self.dim();
                (0..d).map(|i| (0..d).map(|j| q[(j, i)] * x[j]).sum()).collect()
            }
        }
    }

    /// `Q y`.
    fn rotate(&self, y: &[f64], out: &mut [f64]) {
        match &self.rotation {
            None => out.copy_from_slice(y),
            Some(q) => {
                let d = self.dim();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..d).map(|j| q[(i, j)] * y[j]).sum();
                }
            }
        }
    }

    /// `x^T Sigma^{-1} x`.
    pub fn mahalanobis_sq(&self, x: &[f64]) -> f64 {
        self.rotate_t(x).iter().zip(&self.lambda).map(|(y, l)| y * y / l).sum()
    }

    /// Writes `Sigma^{-1} x` into `out`.
    fn precision_apply(&self, x: &[f64], out: &mut [f64]) {
        if self.rotation.is_none() {
            for ((o, v), l) in out.iter_mut().zip(x).zip(&self.lambda) {
                *o = v / l;
            }
            return;
        }
        let y: Vec<f64> = self.rotate_t(x).iter().zip(&self.lambda).map(|(y, l)| y / l).collect();
        self.rotate(&y, out);
    }

    /// `Sigma^{1/2}`-colored standard normal vector.
    fn color(&self, rng: &mut RngStream) -> Vec<f64> {
        let y: Vec<f64> = self.lambda.iter().map(|l| l.sqrt() * rng.normal()).collect();
        let mut out = vec![0.0; self.dim()];
        self.rotate(&y, &mut out);
        out
    }
}

fn check_spectrum(lambda: &[f64]) -> Result<()> {
    if lambda.is_empty() {
        return Err(Error::InvalidConfig("empty scale spectrum".into()));
    }
    if let Some(bad) = lambda.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "covariance eigenvalues must be positive, got {bad}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Gaussian { mean: Vec<f64>, scale: Scale },
    StudentT { nu: f64, scale: Scale },
    ProductIid { marginal: Marginal },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetModel {
    dim: usize,
    family: Family,
}

impl TargetModel {
    pub fn standard_gaussian(dim: usize) -> Self {
        Self {
            dim,
            family: Family::Gaussian {
                mean: vec![0.0; dim],
                scale: Scale::identity(dim),
            },
        }
    }

    pub fn gaussian(mean: Vec<f64>, scale: Scale) -> Result<Self> {
        if mean.len() != scale.dim() {
            return Err(Error::DimensionMismatch {
                expected: scale.dim(),
                got: mean.len(),
            });
        }
        Ok(Self {
            dim: mean.len(),
            family: Family::Gaussian { mean, scale },
        })
    }

    pub fn student_t(nu: f64, scale: Scale) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::InvalidConfig(format!("student-t needs nu > 0, got {nu}")));
        }
        Ok(Self {
            dim: scale.dim(),
            family: Family::StudentT { nu, scale },
        })
    }

    pub fn isotropic_student_t(dim: usize, nu: f64) -> Result<Self> {
        Self::student_t(nu, Scale::identity(dim))
    }

    pub fn product_iid(dim: usize, marginal: Marginal) -> Self {
        Self {
            dim,
            family: Family::ProductIid { marginal },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Short human-readable family tag.
    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Gaussian { .. } => "gaussian",
            Family::StudentT { .. } => "student_t",
            Family::ProductIid { .. } => "product_iid",
        }
    }

    /// True when the density depends on `x` only through `|x|`.
    pub fn is_isotropic(&self) -> bool {
        match &self.family {
            Family::Gaussian { mean, scale } => {
                mean.iter().all(|m| *m == 0.0) && scale.lambda.iter().all(|l| *l == scale.lambda[0])
            }
            Family::StudentT { scale, .. } => scale.lambda.iter().all(|l| *l == scale.lambda[0]),
            Family::ProductIid { marginal } => matches!(marginal, Marginal::StandardGaussian),
        }
    }

    /// Tail-heaviness degree of freedom, if any.
    pub fn nu(&self) -> Option<f64> {
        match self.family {
            Family::StudentT { nu, .. } => Some(nu),
            _ => None,
        }
    }

    /// The product marginal's roughness `E_f[((log f)')^2]`; the standard
    /// Gaussian counts as a product of standard normals.
    pub fn roughness(&self) -> Option<f64> {
        match &self.family {
            Family::ProductIid { marginal } => Some(marginal.roughness()),
            Family::Gaussian { mean, scale } if mean.iter().all(|m| *m == 0.0) && scale.is_identity() => Some(1.0),
            _ => None,
        }
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                got,
            })
        }
    }

    /// Normalized log-density:
    ///
    /// * Gaussian: `-q/2 - log|Sigma|/2 - (d/2) log(2 pi)`
    /// * student-t: `log Gamma((nu+d)/2) - log Gamma(nu/2) - (d/2) log(nu pi) - log|Sigma|/2 - ((nu+d)/2) log(1 + q/nu)`
    /// * product: `sum_i log f(x_i)`
    ///
    /// with `q = (x - mu)^T Sigma^{-1} (x - mu)`.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(self.log_density_unchecked(x))
    }

    pub(crate) fn log_density_unchecked(&self, x: &[f64]) -> f64 {
        let d = self.dim as f64;
        match &self.family {
            Family::Gaussian { mean, scale } => {
                let c: Vec<f64> = x.iter().zip(mean).map(|(a, m)| a - m).collect();
                let q = scale.mahalanobis_sq(&c);
                -0.5 * q - 0.5 * scale.log_det() - 0.5 * d * (2.0 * PI).ln()
            }
            Family::StudentT { nu, scale } => {
                let q = scale.mahalanobis_sq(x);
                ln_gamma(0.5 * (nu + d))
                    - ln_gamma(0.5 * nu)
                    - 0.5 * d * (nu * PI).ln()
                    - 0.5 * scale.log_det()
                    - 0.5 * (nu + d) * (q / nu).ln_1p()
            }
            Family::ProductIid { marginal } => x.iter().map(|v| marginal.log_f(*v)).sum(),
        }
    }

    pub fn grad_log_density(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        let mut out = vec![0.0; self.dim];
        self.grad_into(x, &mut out);
        Ok(out)
    }

    pub(crate) fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.family {
            Family::Gaussian { mean, scale } if scale.rotation.is_none() => {
                for (((o, a), m), l) in out.iter_mut().zip(x).zip(mean).zip(&scale.lambda) {
                    *o = (m - a) / l;
                }
            }
            Family::Gaussian { mean, scale } => {
                let c: Vec<f64> = x.iter().zip(mean).map(|(a, m)| a - m).collect();
                scale.precision_apply(&c, out);
                out.iter_mut().for_each(|v| *v = -*v);
            }
            Family::StudentT { nu, scale } => {
                let d = self.dim as f64;
                scale.precision_apply(x, out);
                let q: f64 = x.iter().zip(out.iter()).map(|(a, b)| a * b).sum();
                let f = -(nu + d) / (nu + q);
                out.iter_mut().for_each(|v| *v *= f);
            }
            Family::ProductIid { marginal } => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = marginal.dlog_f(*v);
                }
            }
        }
    }

    /// One exact draw from the target.
    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        match &self.family {
            Family::Gaussian { mean, scale } => {
                let mut y = scale.color(rng);
                y.iter_mut().zip(mean).for_each(|(a, m)| *a += m);
                y
            }
            Family::StudentT { nu, scale } => {
                let y = scale.color(rng);
                let w: f64 = ChiSquared::new(*nu).expect("nu > 0").sample(rng);
                let s = (nu / w).sqrt();
                y.into_iter().map(|v| v * s).collect()
            }
            Family::ProductIid { marginal } => (0..self.dim).map(|_| marginal.sample(rng)).collect(),
        }
    }
}
