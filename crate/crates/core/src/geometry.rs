//! Stereographic and generalized stereographic projections.
//!
//! A point `z` on the unit sphere in R^{d+1} maps to R^d by
//! `x_i = R z_i / (1 - z_{d+1})`. The generalized projection additionally
//! stretches coordinate `i` by `sqrt(lambda_i)` and then rotates by `Q`.
//! The last coordinate `z_{d+1}` is called the latitude throughout the crate.
//!
//! Densities are transported with the Jacobian factor `(R^2 + |x|_*^2)^d`,
//! where `|.|_*` is the Euclidean norm (standard mode) or the Mahalanobis norm
//! `x^T Q Lambda^{-1} Q^T x` (generalized mode). On the sphere this factor is
//! `(2 R^2 / (1 - z_{d+1}))^d`, which is how it is evaluated here so that the
//! d-th power never overflows. The proportionality constant of the Jacobian is
//! dropped; only ratios are ever consumed.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::targets::TargetModel;

/// States with `1 - z_{d+1}` below this are treated as the north pole.
pub const POLE_GUARD: f64 = 1e-12;

/// Tolerance on `|Q^T Q - I|_max` for generalized projections.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// A unit vector in R^{d+1}.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    coords: Vec<f64>,
}

/// A point in the target space R^d.
pub type EuclideanPoint = Vec<f64>;

impl SpherePoint {
    /// Normalizes `coords` onto the sphere.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::domain("sphere points need at least two coordinates"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("sphere point has non-finite coordinates"));
        }
        let mut p = Self { coords };
        let n = p.norm();
        if n == 0.0 {
            return Err(Error::domain("cannot normalize the zero vector"));
        }
        p.coords.iter_mut().for_each(|c| *c /= n);
        Ok(p)
    }

    /// Wraps coordinates that are already unit length up to rounding, then
    /// renormalizes.
    pub(crate) fn from_unit(coords: Vec<f64>) -> Self {
        let mut p = Self { coords };
        p.renormalize();
        p
    }

    pub fn north_pole(dim: usize) -> Self {
        let mut coords = vec![0.0; dim + 1];
        coords[dim] = 1.0;
        Self { coords }
    }

    pub fn south_pole(dim: usize) -> Self {
        let mut coords = vec![0.0; dim + 1];
        coords[dim] = -1.0;
        Self { coords }
    }

    /// Dimension `d` of the target space (one less than the ambient length).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn latitude(&self) -> f64 {
        self.coords[self.coords.len() - 1]
    }

    /// `1 - z_{d+1}`, computed as `|z_{1:d}|^2 / (1 + z_{d+1})` in the northern
    /// hemisphere where the direct subtraction would cancel.
    pub fn one_minus_latitude(&self) -> f64 {
        gap_of(&self.coords)
    }

    /// False at (or within the guard of) the north pole.
    pub fn is_valid_state(&self) -> bool {
        self.one_minus_latitude() >= POLE_GUARD
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.coords.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn renormalize(&mut self) {
        let n = self.norm();
        self.coords.iter_mut().for_each(|c| *c /= n);
    }

    pub(crate) fn check_pole(&self) -> Result<f64> {
        check_gap(&self.coords)
    }
}

/// `1 - c_last` for a unit vector `c`, without cancellation near the pole.
fn gap_of(c: &[f64]) -> f64 {
    let (last, head) = c.split_last().expect("nonempty");
    if *last > 0.0 {
        head.iter().map(|v| v * v).sum::<f64>() / (1.0 + last)
    } else {
        1.0 - last
    }
}

fn check_gap(c: &[f64]) -> Result<f64> {
    let gap = gap_of(c);
    if gap < POLE_GUARD {
        Err(Error::Pole { gap, guard: POLE_GUARD })
    } else {
        Ok(gap)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProjectionMode {
    Standard,
    /// `x = Q diag(sqrt(lambda)) SP(z)`.
    Generalized {
        lambda: Vec<f64>,
        sqrt_lambda: Vec<f64>,
        rotation: DMatrix<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionConfig {
    dim: usize,
    radius: f64,
    mode: ProjectionMode,
}

fn check_radius(radius: f64) -> Result<()> {
    if radius > 0.0 && radius.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "radius must be positive and finite, got {radius}"
        )))
    }
}

/// `max |Q^T Q - I|`.
pub fn orthogonality_defect(q: &DMatrix<f64>) -> f64 {
    let n = q.nrows();
    let qtq = q.transpose() * q;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((qtq[(i, j)] - target).abs());
        }
    }
    worst
}

impl ProjectionConfig {
    pub fn standard(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        check_radius(radius)?;
        Ok(Self {
            dim,
            radius,
            mode: ProjectionMode::Standard,
        })
    }

    /// Standard projection with `R = sqrt(d)`.
    pub fn standard_default(dim: usize) -> Self {
        Self::standard(dim, (dim as f64).sqrt()).expect("positive dimension")
    }

    pub fn generalized(radius: f64, lambda: Vec<f64>, rotation: DMatrix<f64>) -> Result<Self> {
        check_radius(radius)?;
        let dim = lambda.len();
        if dim == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        if rotation.nrows() != dim || rotation.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: rotation.nrows(),
            });
        }
        if let Some(bad) = lambda.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "scale eigenvalues must be positive, got {bad}"
            )));
        }
        let defect = orthogonality_defect(&rotation);
        if defect > ORTHOGONALITY_TOL {
            return Err(Error::InvalidConfig(format!(
                "rotation is not orthogonal: |Q^T Q - I|_max = {defect:e}"
            )));
        }
        let sqrt_lambda = lambda.iter().map(|l| l.sqrt()).collect();
        Ok(Self {
            dim,
            radius,
            mode: ProjectionMode::Generalized {
                lambda,
                sqrt_lambda,
                rotation,
            },
        })
    }

    /// Generalized projection with `R^2 = sum(lambda)`.
    pub fn generalized_trace_radius(lambda: Vec<f64>, rotation: DMatrix<f64>) -> Result<Self> {
        let r = lambda.iter().sum::<f64>().sqrt();
        Self::generalized(r, lambda, rotation)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn mode(&self) -> &ProjectionMode {
        &self.mode
    }

    pub fn is_generalized(&self) -> bool {
        matches!(self.mode, ProjectionMode::Generalized { .. })
    }

    /// Same configuration with a different radius.
    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        check_radius(radius)?;
        Ok(Self { radius, ..self.clone() })
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

    /// `SP(z)`; fails within the pole guard.
    pub fn forward(&self, z: &SpherePoint) -> Result<EuclideanPoint> {
        let mut x = vec![0.0; self.dim];
        self.forward_into(z, &mut x)?;
        Ok(x)
    }

    pub fn forward_into(&self, z: &SpherePoint, out: &mut [f64]) -> Result<()> {
        self.check_dim(z.dim())?;
        let gap = z.check_pole()?;
        self.forward_coords(z.coords(), gap, out);
        Ok(())
    }

    fn forward_coords(&self, c: &[f64], gap: f64, out: &mut [f64]) {
        let scale = self.radius / gap;
        let zc = &c[..self.dim];
        match &self.mode {
            ProjectionMode::Standard => {
                for (o, c) in out.iter_mut().zip(zc) {
                    *o = scale * c;
                }
            }
            ProjectionMode::Generalized {
                sqrt_lambda, rotation, ..
            } => {
                let y: Vec<f64> = zc.iter().zip(sqrt_lambda).map(|(c, s)| scale * s * c).collect();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..self.dim).map(|j| rotation[(i, j)] * y[j]).sum();
                }
            }
        }
    }

    /// Whitened coordinates `diag(lambda)^{-1/2} Q^T x` (identity in standard mode).
    fn whiten(&self, x: &[f64]) -> Vec<f64> {
        match &self.mode {
            ProjectionMode::Standard => x.to_vec(),
            ProjectionMode::Generalized {
                sqrt_lambda, rotation, ..
            } => (0..self.dim)
                .map(|i| {
                    let qt_x: f64 = (0..self.dim).map(|j| rotation[(j, i)] * x[j]).sum();
                    qt_x / sqrt_lambda[i]
                })
                .collect(),
        }
    }

    /// `SP^{-1}(x)`; total on finite input.
    pub fn inverse(&self, x: &[f64]) -> Result<SpherePoint> {
        self.check_dim(x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("cannot project a non-finite point"));
        }
        let y = self.whiten(x);
        let r2 = self.radius * self.radius;
        let n2: f64 = y.iter().map(|v| v * v).sum();
        let denom = n2 + r2;
        let mut coords: Vec<f64> = y.iter().map(|v| 2.0 * self.radius * v / denom).collect();
        coords.push((n2 - r2) / denom);
        Ok(SpherePoint::from_unit(coords))
    }

    /// `|x|_*^2`: Euclidean in standard mode, `x^T Q Lambda^{-1} Q^T x` otherwise.
    pub fn norm_sq_star(&self, x: &[f64]) -> f64 {
        self.whiten(x).iter().map(|v| v * v).sum()
    }

    /// `d log(R^2 + |x|_*^2)`, the log-Jacobian up to an additive constant.
    pub fn log_jacobian(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        let r2 = self.radius * self.radius;
        Ok(self.dim as f64 * (r2 + self.norm_sq_star(x)).ln())
    }

    /// The same log-Jacobian evaluated from the latitude via
    /// `R^2 + |x|_*^2 = 2 R^2 / (1 - z_{d+1})`.
    pub fn log_jacobian_at(&self, z: &SpherePoint) -> Result<f64> {
        let gap = z.check_pole()?;
        Ok(self.dim as f64 * (2.0 * self.radius * self.radius / gap).ln())
    }
}

/// `log pi_S(z)` up to an additive constant, given the already-projected `x`.
pub(crate) fn log_target_sphere_at(
    z: &SpherePoint,
    x: &[f64],
    target: &TargetModel,
    cfg: &ProjectionConfig,
) -> Result<f64> {
    let lp = target.log_density_unchecked(x);
    if lp == f64::NEG_INFINITY {
        return Ok(lp);
    }
    Ok(lp + cfg.log_jacobian_at(z)?)
}

/// `log pi(SP(z)) + d log(R^2 + |SP(z)|_*^2)`.
pub fn log_target_sphere(z: &SpherePoint, target: &TargetModel, cfg: &ProjectionConfig) -> Result<f64> {
    check_target(target, cfg)?;
    let x = cfg.forward(z)?;
    log_target_sphere_at(z, &x, target, cfg)
}

pub(crate) fn check_target(target: &TargetModel, cfg: &ProjectionConfig) -> Result<()> {
    if target.dim() == cfg.dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: cfg.dim(),
            got: target.dim(),
        })
    }
}

/// One ambient representative of `grad_z log pi_S(z)`:
///
/// * `d/dz_i = (Q^T grad)_i sqrt(lambda_i) R / (1 - z_{d+1})` for `i <= d`
/// * `d/dz_{d+1} = (grad . x + d) / (1 - z_{d+1})`
///
/// In standard mode the first line reduces to `grad_i (R^2 + |x|^2) / (2R)`.
pub fn ambient_grad_log_target(z: &SpherePoint, target: &TargetModel, cfg: &ProjectionConfig) -> Result<Vec<f64>> {
    check_target(target, cfg)?;
    let d = cfg.dim();
    if z.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: z.dim(),
        });
    }
    let mut ws = GradWorkspace::new(d);
    let mut out = vec![0.0; d + 1];
    ambient_grad_into(z.coords(), target, cfg, &mut ws, &mut out)?;
    Ok(out)
}

/// Scratch buffers for [`ambient_grad_into`].
#[derive(Debug, Clone)]
pub(crate) struct GradWorkspace {
    x: Vec<f64>,
    g: Vec<f64>,
}

impl GradWorkspace {
    pub(crate) fn new(d: usize) -> Self {
        Self {
            x: vec![0.0; d],
            g: vec![0.0; d],
        }
    }
}

/// Allocation-free [`ambient_grad_log_target`] on raw unit coordinates of
/// matching dimension.
pub(crate) fn ambient_grad_into(
    c: &[f64],
    target: &TargetModel,
    cfg: &ProjectionConfig,
    ws: &mut GradWorkspace,
    out: &mut [f64],
) -> Result<()> {
    let d = cfg.dim();
    let gap = check_gap(c)?;
    cfg.forward_coords(c, gap, &mut ws.x);
    let (x, g) = (&ws.x, &mut ws.g);
    target.grad_into(x, g);
    let scale = cfg.radius() / gap;
    match cfg.mode() {
        ProjectionMode::Standard => {
            for i in 0..d {
                out[i] = g[i] * scale;
            }
        }
        ProjectionMode::Generalized {
            sqrt_lambda, rotation, ..
        } => {
            for i in 0..d {
                let qt_g: f64 = (0..d).map(|j| rotation[(j, i)] * g[j]).sum();
                out[i] = qt_g * sqrt_lambda[i] * scale;
            }
        }
    }
    let gx: f64 = g.iter().zip(x).map(|(a, b)| a * b).sum();
    out[d] = (gx + d as f64) / gap;
    Ok(())
}

/// Removes the normal component `(z . w) z` from `w`, twice to mop up rounding.
pub fn project_tangent(z: &SpherePoint, w: &mut [f64]) {
    for _ in 0..2 {
        let c = z.dot(w);
        for (wi, zi) in w.iter_mut().zip(z.coords()) {
            *wi -= c * zi;
        }
    }
}

/// Riemannian gradient of `log pi_S` on the sphere (tangential projection of
/// any ambient representative).
pub fn tangent_grad_log_target(z: &SpherePoint, target: &TargetModel, cfg: &ProjectionConfig) -> Result<Vec<f64>> {
    let mut g = ambient_grad_log_target(z, target, cfg)?;
    project_tangent(z, &mut g);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::targets::{Marginal, Scale, TargetModel};

    fn random_sphere(rng: &mut RngStream, d: usize) -> SpherePoint {
        SpherePoint::new(rng.normal_vec(d + 1)).unwrap()
    }

    fn random_rotation(rng: &mut RngStream, d: usize) -> DMatrix<f64> {
        let m = DMatrix::from_fn(d, d, |_, _| rng.normal());
        m.qr().q()
    }

    #[test]
    fn south_pole_maps_to_origin() {
        for r in [0.3, 1.0, 7.0] {
            let cfg = ProjectionConfig::standard(4, r).unwrap();
            let x = cfg.forward(&SpherePoint::south_pole(4)).unwrap();
            assert!(x.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn hand_evaluated_forward_d1() {
        let cfg = ProjectionConfig::standard(1, 1.0).unwrap();
        let z = SpherePoint::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(cfg.forward(&z).unwrap(), vec![1.0]);
    }

    #[test]
    fn equator_maps_to_radius_sphere() {
        let mut rng = RngStream::from_seed(1);
        let cfg = ProjectionConfig::standard(5, 2.5).unwrap();
        for _ in 0..20 {
            let mut c = rng.normal_vec(5);
            c.push(0.0);
            let z = SpherePoint::new(c).unwrap();
            let x = cfg.forward(&z).unwrap();
            let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn pole_is_rejected() {
        let cfg = ProjectionConfig::standard(3, 1.0).unwrap();
        let err = cfg.forward(&SpherePoint::north_pole(3)).unwrap_err();
        assert!(matches!(err, Error::Pole { .. }));
        assert!(!SpherePoint::north_pole(3).is_valid_state());
    }

    #[test]
    fn inverse_of_origin_is_south_pole() {
        let cfg = ProjectionConfig::standard(3, 1.7).unwrap();
        let z = cfg.inverse(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(z.coords(), &[0.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn hand_evaluated_inverse_d2() {
        let r = 2f64.sqrt();
        let cfg = ProjectionConfig::standard(2, r).unwrap();
        let z = cfg.inverse(&[r, 0.0]).unwrap();
        let expect = [1.0, 0.0, 0.0];
        for (a, b) in z.coords().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn round_trip_euclidean() {
        let mut rng = RngStream::from_seed(2);
        let cfg = ProjectionConfig::standard(6, 2.0).unwrap();
        for i in 0..1000 {
            let scale = 10f64.powi((i % 9) - 4);
            let x: Vec<f64> = rng.normal_vec(6).iter().map(|v| v * scale).collect();
            let back = cfg.forward(&cfg.inverse(&x).unwrap()).unwrap();
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (a, b) in x.iter().zip(&back) {
                assert!((a - b).abs() <= 1e-10 * (1.0 + nx), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn round_trip_sphere() {
        let mut rng = RngStream::from_seed(3);
        let cfg = ProjectionConfig::standard(4, 1.3).unwrap();
        for _ in 0..1000 {
            let z = random_sphere(&mut rng, 4);
            let back = cfg.inverse(&cfg.forward(&z).unwrap()).unwrap();
            for (a, b) in z.coords().iter().zip(back.coords()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn near_pole_round_trip_keeps_precision() {
        let cfg = ProjectionConfig::standard(3, 1.0).unwrap();
        let eps: f64 = 1e-9;
        let lat = 1.0 - eps;
        let z = SpherePoint::new(vec![(1.0 - lat * lat).sqrt(), 0.0, 0.0, lat]).unwrap();
        let back = cfg.inverse(&cfg.forward(&z).unwrap()).unwrap();
        assert!((back.one_minus_latitude() / z.one_minus_latitude() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn latitude_identity() {
        let mut rng = RngStream::from_seed(4);
        let r = 3.0;
        let cfg = ProjectionConfig::standard(8, r).unwrap();
        let mut checked = 0;
        while checked < 500 {
            let z = random_sphere(&mut rng, 8);
            if z.latitude() > 1.0 - 1e-6 {
                continue;
            }
            let x = cfg.forward(&z).unwrap();
            let lhs = cfg.norm_sq_star(&x);
            let rhs = r * r * (1.0 + z.latitude()) / (1.0 - z.latitude());
            assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1e-300));
            checked += 1;
        }
    }

    #[test]
    fn log_jacobian_values() {
        let cfg = ProjectionConfig::standard(3, 2.0).unwrap();
        assert!((cfg.log_jacobian(&[0.0; 3]).unwrap() - 3.0 * 4f64.ln()).abs() < 1e-15);
        let cfg1 = ProjectionConfig::standard(1, 1.0).unwrap();
        assert!((cfg1.log_jacobian(&[1.0]).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn generalized_identity_matches_standard() {
        let mut rng = RngStream::from_seed(5);
        let d = 5;
        let std = ProjectionConfig::standard(d, 1.9).unwrap();
        let gen = ProjectionConfig::generalized(1.9, vec![1.0; d], DMatrix::identity(d, d)).unwrap();
        for _ in 0..200 {
            let z = random_sphere(&mut rng, d);
            let a = std.forward(&z).unwrap();
            let b = gen.forward(&z).unwrap();
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).abs() <= 1e-12 * (1.0 + p.abs()));
            }
            let x = rng.normal_vec(d);
            let za = std.inverse(&x).unwrap();
            let zb = gen.inverse(&x).unwrap();
            for (p, q) in za.coords().iter().zip(zb.coords()) {
                assert!((p - q).abs() <= 1e-12);
            }
            let ja = std.log_jacobian(&x).unwrap();
            let jb = gen.log_jacobian(&x).unwrap();
            assert!((ja - jb).abs() <= 1e-12 * (1.0 + ja.abs()));
        }
    }

    #[test]
    fn generalized_round_trip_and_latitude_identity() {
        let mut rng = RngStream::from_seed(6);
        let d = 6;
        let lambda: Vec<f64> = (0..d).map(|i| 0.2 + i as f64).collect();
        let q = random_rotation(&mut rng, d);
        let cfg = ProjectionConfig::generalized(2.2, lambda, q).unwrap();
        for _ in 0..300 {
            let x: Vec<f64> = rng.normal_vec(d).iter().map(|v| 3.0 * v).collect();
            let z = cfg.inverse(&x).unwrap();
            let back = cfg.forward(&z).unwrap();
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (a, b) in x.iter().zip(&back) {
                assert!((a - b).abs() <= 1e-10 * (1.0 + nx));
            }
            let lhs = cfg.norm_sq_star(&x);
            let rhs = 2.2f64.powi(2) * (1.0 + z.latitude()) / (1.0 - z.latitude());
            assert!((lhs - rhs).abs() <= 1e-9 * rhs);
        }
    }

    #[test]
    fn rejects_non_orthogonal_rotation() {
        let mut q = DMatrix::<f64>::identity(3, 3);
        q[(0, 1)] = 0.1;
        assert!(ProjectionConfig::generalized(1.0, vec![1.0; 3], q).is_err());
        assert!(ProjectionConfig::generalized(1.0, vec![1.0, -1.0, 1.0], DMatrix::identity(3, 3)).is_err());
        assert!(ProjectionConfig::standard(3, 0.0).is_err());
    }

    #[test]
    fn flat_transport_for_matched_student_t() {
        let d = 10;
        let target = TargetModel::isotropic_student_t(d, d as f64).unwrap();
        let cfg = ProjectionConfig::standard_default(d);
        let mut rng = RngStream::from_seed(7);
        let base = log_target_sphere(&random_sphere(&mut rng, d), &target, &cfg).unwrap();
        for _ in 0..10_000 {
            let z = random_sphere(&mut rng, d);
            let v = log_target_sphere(&z, &target, &cfg).unwrap();
            assert!((v - base).abs() <= 1e-8, "{}", v - base);
        }
    }

    #[test]
    fn gaussian_d1_matches_g_infinity() {
        let target = TargetModel::standard_gaussian(1);
        let cfg = ProjectionConfig::standard(1, 1.0).unwrap();
        let g_inf = |z: f64| 1.0 / (1.0 - z) - 0.5 + (1.0 - z).ln();
        let mut rng = RngStream::from_seed(8);
        for _ in 0..200 {
            let a = random_sphere(&mut rng, 1);
            let b = random_sphere(&mut rng, 1);
            if a.latitude() > 0.99 || b.latitude() > 0.99 {
                continue;
            }
            let lhs = log_target_sphere(&a, &target, &cfg).unwrap() - log_target_sphere(&b, &target, &cfg).unwrap();
            let rhs = -(g_inf(a.latitude()) - g_inf(b.latitude()));
            assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn log_target_matches_direct_formula() {
        let mut rng = RngStream::from_seed(9);
        let d = 4;
        let targets = [
            TargetModel::standard_gaussian(d),
            TargetModel::isotropic_student_t(d, 2.5).unwrap(),
            TargetModel::product_iid(d, Marginal::scaled_student_t(6.0).unwrap()),
        ];
        let cfg = ProjectionConfig::standard(d, 1.5).unwrap();
        for target in &targets {
            for _ in 0..100 {
                let x = rng.normal_vec(d);
                let z = cfg.inverse(&x).unwrap();
                let direct = target.log_density(&x).unwrap()
                    + d as f64 * (1.5f64.powi(2) + x.iter().map(|v| v * v).sum::<f64>()).ln();
                let via = log_target_sphere(&z, target, &cfg).unwrap();
                assert!((via - direct).abs() <= 1e-9 * (1.0 + direct.abs()), "{via} vs {direct}");
            }
        }
    }

    #[test]
    fn tangent_grad_vanishes_for_matched_student_t() {
        let d = 12;
        let target = TargetModel::isotropic_student_t(d, d as f64).unwrap();
        let cfg = ProjectionConfig::standard_default(d);
        let mut rng = RngStream::from_seed(10);
        for _ in 0..200 {
            let z = random_sphere(&mut rng, d);
            let amb = ambient_grad_log_target(&z, &target, &cfg).unwrap();
            let scale = amb.iter().map(|v| v * v).sum::<f64>().sqrt();
            let g = tangent_grad_log_target(&z, &target, &cfg).unwrap();
            let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(n <= 1e-12 * (1.0 + scale), "{n} vs {scale}");
        }
    }

    #[test]
    fn tangent_grad_isotropic_student_t_latitude_form() {
        let d = 9;
        let mut rng = RngStream::from_seed(11);
        for k in [0.5, 2.0, 4.0] {
            let target = TargetModel::isotropic_student_t(d, k * d as f64).unwrap();
            let cfg = ProjectionConfig::standard_default(d);
            for _ in 0..100 {
                let z = random_sphere(&mut rng, d);
                let lat = z.latitude();
                let om = 1.0 - lat;
                let c = -(d as f64) * lat * (k - 1.0) / (om * ((k - 1.0) * om + 2.0));
                let mut expect = vec![0.0; d + 1];
                expect[d] = c;
                project_tangent(&z, &mut expect);
                let got = tangent_grad_log_target(&z, &target, &cfg).unwrap();
                let scale = 1.0 + expect.iter().map(|v| v.abs()).fold(0.0, f64::max);
                for (a, b) in got.iter().zip(&expect) {
                    assert!((a - b).abs() <= 1e-9 * scale, "k={k}: {a} vs {b}");
                }
            }
        }
    }

    /// Geodesic central differences of `log pi_S` along random tangent directions.
    fn fd_directional(z: &SpherePoint, u: &[f64], target: &TargetModel, cfg: &ProjectionConfig, step: f64) -> f64 {
        let along = |t: f64| {
            let c: Vec<f64> = z
                .coords()
                .iter()
                .zip(u)
                .map(|(zi, ui)| t.cos() * zi + t.sin() * ui)
                .collect();
            log_target_sphere(&SpherePoint::new(c).unwrap(), target, cfg).unwrap()
        };
        (along(step) - along(-step)) / (2.0 * step)
    }

    #[test]
    fn tangent_grad_matches_finite_differences() {
        let mut rng = RngStream::from_seed(12);
        let d = 5;
        let lambda = vec![0.5, 1.0, 2.0, 3.0, 0.7];
        let q = random_rotation(&mut rng, d);
        let targets = [
            TargetModel::standard_gaussian(d),
            TargetModel::isotropic_student_t(d, 3.0).unwrap(),
            TargetModel::product_iid(d, Marginal::scaled_student_t(5.0).unwrap()),
            TargetModel::student_t(4.0, Scale::rotated(lambda.clone(), q.clone()).unwrap()).unwrap(),
        ];
        let cfgs = [
            ProjectionConfig::standard_default(d),
            ProjectionConfig::generalized(1.7, lambda, q).unwrap(),
        ];
        let mut pairs = 0;
        while pairs < 100 {
            let target = &targets[pairs % targets.len()];
            let cfg = &cfgs[(pairs / targets.len()) % 2];
            let z = random_sphere(&mut rng, d);
            if z.latitude() > 0.9 {
                continue;
            }
            let g = tangent_grad_log_target(&z, target, cfg).unwrap();
            let mut u = rng.normal_vec(d + 1);
            project_tangent(&z, &mut u);
            let nu = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            u.iter_mut().for_each(|v| *v /= nu);
            let analytic: f64 = g.iter().zip(&u).map(|(a, b)| a * b).sum();
            let fd = fd_directional(&z, &u, target, cfg, 1e-5);
            let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((analytic - fd).abs() <= 1e-5 * (1.0 + gnorm), "{analytic} vs {fd}");
            pairs += 1;
        }
    }

    #[test]
    fn tangent_grad_is_tangent() {
        let mut rng = RngStream::from_seed(13);
        let d = 7;
        let target = TargetModel::standard_gaussian(d);
        let cfg = ProjectionConfig::standard(d, 2.0).unwrap();
        for _ in 0..500 {
            let z = random_sphere(&mut rng, d);
            if !z.is_valid_state() {
                continue;
            }
            let g = tangent_grad_log_target(&z, &target, &cfg).unwrap();
            let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(z.dot(&g).abs() <= 1e-10 * (1.0 + n));
        }
    }
}
