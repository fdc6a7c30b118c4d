use std::f64::consts::PI;

use rand_distr::{Distribution, StudentT};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature;
use crate::rng::RngStream;

/// One-dimensional marginal `f` of a product i.i.d. target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal {
    StandardGaussian,
    /// Student-t with `nu` degrees of freedom rescaled by `sqrt((nu - 2) / nu)`
    /// so that its variance is one.
    ScaledStudentT {
        nu: f64,
    },
}

impl Marginal {
    pub fn scaled_student_t(nu: f64) -> Result<Self> {
        if nu > 2.0 && nu.is_finite() {
            Ok(Marginal::ScaledStudentT { nu })
        } else {
            Err(Error::domain(format!(
                "scaled student-t marginal needs nu > 2, got {nu}"
            )))
        }
    }

    /// Standard deviation of the marginal; sets the quadrature range.
    pub fn sigma(&self) -> f64 {
        1.0
    }

    /// Normalized log-density.
    pub fn log_f(&self, y: f64) -> f64 {
        match *self {
            Marginal::StandardGaussian => -0.5 * y * y - 0.5 * (2.0 * PI).ln(),
            Marginal::ScaledStudentT { nu } => {
                let a = nu - 2.0;
                ln_gamma(0.5 * (nu + 1.0))
                    - ln_gamma(0.5 * nu)
                    - 0.5 * (a * PI).ln()
                    - 0.5 * (nu + 1.0) * (y * y / a).ln_1p()
            }
        }
    }

    pub fn dlog_f(&self, y: f64) -> f64 {
        match *self {
            Marginal::StandardGaussian => -y,
            Marginal::ScaledStudentT { nu } => -(nu + 1.0) * y / (nu - 2.0 + y * y),
        }
    }

    pub fn d2log_f(&self, y: f64) -> f64 {
        match *self {
            Marginal::StandardGaussian => -1.0,
            Marginal::ScaledStudentT { nu } => {
                let a = nu - 2.0;
                let s = a + y * y;
                -(nu + 1.0) * (a - y * y) / (s * s)
            }
        }
    }

    /// `E_f[((log f)')^2]`, the Fisher information for location.
    pub fn roughness(&self) -> f64 {
        match *self {
            Marginal::StandardGaussian => 1.0,
            Marginal::ScaledStudentT { nu } => nu * (nu + 1.0) / ((nu + 3.0) * (nu - 2.0)),
        }
    }

    pub fn second_moment(&self) -> f64 {
        1.0
    }

    fn expect<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        let s = self.sigma();
        quadrature::integrate(|y| g(y) * self.log_f(y).exp(), -50.0 * s, 50.0 * s, 200, 1e-9)
    }

    /// Roughness by adaptive quadrature over `[-50 sigma, 50 sigma]`.
    pub fn roughness_numeric(&self) -> f64 {
        self.expect(|y| self.dlog_f(y).powi(2))
    }

    pub fn second_moment_numeric(&self) -> f64 {
        self.expect(|y| y * y)
    }

    pub fn mass_numeric(&self) -> f64 {
        self.expect(|_| 1.0)
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match *self {
            Marginal::StandardGaussian => rng.normal(),
            Marginal::ScaledStudentT { nu } => {
                let t = StudentT::new(nu).expect("nu > 2 checked at construction");
                ((nu - 2.0) / nu).sqrt() * t.sample(rng)
            }
        }
    }
}
