//! Discrete-time samplers: SPS, GSPS, RSPS and the Euclidean random-walk
//! Metropolis baseline.
//!
//! The chain state is stored as a sphere point together with its image and
//! the cached log-density; the Euclidean image is what a [`Trace`] records.

use log::warn;

use crate::error::{Error, Result};
use crate::geometry::{self, ProjectionConfig, SpherePoint};
use crate::rng::{labels, RngStream};
use crate::targets::{Family, TargetModel};

/// Latitude used for the "north pole" start, which itself has no image.
pub const NORTH_POLE_START_LATITUDE: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Just below the north pole, in the direction of the first axis.
    NorthPole,
    SouthPole,
    UniformSphere,
    Point(Vec<f64>),
    /// An exact draw from the target.
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainKind {
    Sps,
    Gsps,
    Rsps,
    Rwm,
}

impl ChainKind {
    pub fn name(&self) -> &'static str {
        match self {
            ChainKind::Sps => "sps",
            ChainKind::Gsps => "gsps",
            ChainKind::Rsps => "rsps",
            ChainKind::Rwm => "rwm",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RwmConfig {
    pub target: TargetModel,
    pub projection: ProjectionConfig,
    /// Per-coordinate proposal standard deviation (tangent space for the
    /// spherical samplers, R^d for RWM).
    pub h: f64,
    pub n_steps: usize,
    pub init: Init,
    pub seed: u64,
    /// Root stream id; replicates sharing a seed differ only here.
    pub stream: u64,
}

impl RwmConfig {
    /// SPS defaults: `R = sqrt(d)`.
    pub fn new(target: TargetModel, h: f64, n_steps: usize, init: Init, seed: u64) -> Self {
        let projection = ProjectionConfig::standard_default(target.dim());
        Self {
            target,
            projection,
            h,
            n_steps,
            init,
            seed,
            stream: 0,
        }
    }

    pub fn with_projection(mut self, projection: ProjectionConfig) -> Self {
        self.projection = projection;
        self
    }

    pub fn validate(&self, kind: ChainKind) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::InvalidConfig(format!("step h must be positive, got {}", self.h)));
        }
        geometry::check_target(&self.target, &self.projection)?;
        if kind == ChainKind::Gsps && !self.projection.is_generalized() {
            return Err(Error::InvalidConfig("gsps needs a generalized projection".into()));
        }
        if kind == ChainKind::Rsps && self.target.dim() < 2 {
            return Err(Error::InvalidConfig("rsps needs d >= 2".into()));
        }
        if let Init::Point(x) = &self.init {
            if x.len() != self.target.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.target.dim(),
                    got: x.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub sampler: String,
    pub seed: u64,
    pub stream: u64,
    pub dim: usize,
    /// Step size; `None` for discretized continuous-time paths.
    pub h: Option<f64>,
    pub radius: f64,
    pub target: String,
}

/// Output of a discrete-time chain. `states` and `latitudes` include the
/// initial state; the per-step vectors have one entry per transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub states: Vec<Vec<f64>>,
    pub latitudes: Vec<f64>,
    pub accepted: Vec<bool>,
    pub log_ratios: Vec<f64>,
    /// Global times of the samples for discretized continuous-time paths.
    pub times: Option<Vec<f64>>,
    pub meta: TraceMeta,
}

impl Trace {
    pub fn n_steps(&self) -> usize {
        self.accepted.len()
    }

    pub fn dim(&self) -> usize {
        self.meta.dim
    }

    /// Coordinate `i` of every state.
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|x| x[i]).collect()
    }
}

/// Current chain state with its cached log-density.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub z: SpherePoint,
    pub x: Vec<f64>,
    /// `log pi_S(z)` for the spherical samplers, `log pi(x)` for RWM.
    pub log_density: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub accepted: bool,
    pub log_ratio: f64,
}

fn accept(log_ratio: f64, rng: &mut RngStream) -> bool {
    let u = rng.uniform_open();
    log_ratio >= 0.0 || u.ln() < log_ratio
}

/// Tangent Gaussian step of size `h` followed by renormalization.
pub fn sps_propose(z: &SpherePoint, h: f64, rng: &mut RngStream) -> Result<SpherePoint> {
    let d1 = z.coords().len();
    for _ in 0..2 {
        let mut dz: Vec<f64> = (0..d1).map(|_| h * rng.normal()).collect();
        let c = z.dot(&dz);
        for (a, zi) in dz.iter_mut().zip(z.coords()) {
            *a -= c * zi;
        }
        let w: Vec<f64> = z.coords().iter().zip(&dz).map(|(a, b)| a + b).collect();
        let n = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n >= 1e-14 {
            return Ok(SpherePoint::from_unit(w.into_iter().map(|v| v / n).collect()));
        }
    }
    Err(Error::DegenerateProposal(0.0))
}

fn sphere_state(z: SpherePoint, target: &TargetModel, cfg: &ProjectionConfig) -> Result<ChainState> {
    let x = cfg.forward(&z)?;
    let log_density = geometry::log_target_sphere_at(&z, &x, target, cfg)?;
    Ok(ChainState { z, x, log_density })
}

/// One SPS (or GSPS, depending on the projection) Metropolis step.
pub fn sps_step(
    state: &ChainState,
    target: &TargetModel,
    cfg: &ProjectionConfig,
    h: f64,
    rng: &mut RngStream,
) -> Result<(ChainState, StepOutcome)> {
    let proposal = sps_propose(&state.z, h, rng)?;
    if !proposal.is_valid_state() {
        rng.uniform_open();
        let out = StepOutcome {
            accepted: false,
            log_ratio: f64::NEG_INFINITY,
        };
        return Ok((state.clone(), out));
    }
    let next = sphere_state(proposal, target, cfg)?;
    let log_ratio = next.log_density - state.log_density;
    let ok = accept(log_ratio, rng);
    let out = StepOutcome {
        accepted: ok,
        log_ratio,
    };
    Ok((if ok { next } else { state.clone() }, out))
}

/// GSPS step; identical mechanics with the Mahalanobis Jacobian term.
pub fn gsps_step(
    state: &ChainState,
    target: &TargetModel,
    cfg: &ProjectionConfig,
    h: f64,
    rng: &mut RngStream,
) -> Result<(ChainState, StepOutcome)> {
    if !cfg.is_generalized() {
        return Err(Error::InvalidConfig("gsps needs a generalized projection".into()));
    }
    sps_step(state, target, cfg, h, rng)
}

/// Euclidean form `log pi(x) + d log(R^2 + |x|_*^2)`.
fn euclidean_log_density(x: &[f64], target: &TargetModel, cfg: &ProjectionConfig) -> Result<f64> {
    let lp = target.log_density_unchecked(x);
    if lp == f64::NEG_INFINITY {
        return Ok(lp);
    }
    Ok(lp + cfg.log_jacobian(x)?)
}

/// The composite RSPS proposal: coordinate 1 from `SP(z')`, coordinates
/// `2..d` from `SP(z'')`. `None` if either proposal hits the pole guard.
pub fn rsps_propose(z: &SpherePoint, cfg: &ProjectionConfig, h: f64, rng: &mut RngStream) -> Result<Option<Vec<f64>>> {
    let first = sps_propose(z, h, rng)?;
    let second = sps_propose(z, h, rng)?;
    if !first.is_valid_state() || !second.is_valid_state() {
        return Ok(None);
    }
    let x1 = cfg.forward(&first)?;
    let mut x = cfg.forward(&second)?;
    x[0] = x1[0];
    Ok(Some(x))
}

pub fn rsps_step(
    state: &ChainState,
    target: &TargetModel,
    cfg: &ProjectionConfig,
    h: f64,
    rng: &mut RngStream,
) -> Result<(ChainState, StepOutcome)> {
    let Some(xh) = rsps_propose(&state.z, cfg, h, rng)? else {
        rng.uniform_open();
        let out = StepOutcome {
            accepted: false,
            log_ratio: f64::NEG_INFINITY,
        };
        return Ok((state.clone(), out));
    };
    let lp = euclidean_log_density(&xh, target, cfg)?;
    let log_ratio = lp - state.log_density;
    let ok = accept(log_ratio, rng);
    let out = StepOutcome {
        accepted: ok,
        log_ratio,
    };
    if !ok {
        return Ok((state.clone(), out));
    }
    let z = cfg.inverse(&xh)?;
    Ok((
        ChainState {
            z,
            x: xh,
            log_density: lp,
        },
        out,
    ))
}

/// Gaussian random-walk Metropolis in R^d with step `sigma`.
pub fn rwm_step(
    x: &[f64],
    log_density: f64,
    target: &TargetModel,
    sigma: f64,
    rng: &mut RngStream,
) -> (Vec<f64>, f64, StepOutcome) {
    let xh: Vec<f64> = x.iter().map(|v| v + sigma * rng.normal()).collect();
    let lp = target.log_density_unchecked(&xh);
    let log_ratio = lp - log_density;
    let ok = accept(log_ratio, rng);
    let out = StepOutcome {
        accepted: ok,
        log_ratio,
    };
    if ok {
        (xh, lp, out)
    } else {
        (x.to_vec(), log_density, out)
    }
}

/// Initial sphere point for `init`.
pub fn initial_point(
    init: &Init,
    target: &TargetModel,
    cfg: &ProjectionConfig,
    rng: &mut RngStream,
) -> Result<SpherePoint> {
    let d = cfg.dim();
    match init {
        Init::NorthPole => {
            let lat = NORTH_POLE_START_LATITUDE;
            let mut c = vec![0.0; d + 1];
            c[0] = (1.0 - lat * lat).sqrt();
            c[d] = lat;
            SpherePoint::new(c)
        }
        Init::SouthPole => Ok(SpherePoint::south_pole(d)),
        Init::UniformSphere => loop {
            let z = SpherePoint::new(rng.normal_vec(d + 1))?;
            if z.is_valid_state() {
                return Ok(z);
            }
        },
        Init::Point(x) => cfg.inverse(x),
        Init::Stationary => cfg.inverse(&target.sample(rng)),
    }
}

/// A running chain; [`run_chain`] collects its output into a [`Trace`].
#[derive(Debug, Clone)]
pub struct Chain {
    kind: ChainKind,
    config: RwmConfig,
    state: ChainState,
    rng: RngStream,
}

impl Chain {
    pub fn new(config: RwmConfig, kind: ChainKind) -> Result<Self> {
        config.validate(kind)?;
        if config.init == Init::NorthPole {
            if let Family::StudentT { nu, .. } = config.target.family() {
                if *nu < config.target.dim() as f64 {
                    warn!(
                        "north-pole start on a student-t target with nu = {nu} < d = {}: \
                         early proposals are almost surely rejected",
                        config.target.dim()
                    );
                }
            }
        }
        let root = RngStream::new(config.seed, config.stream);
        let mut init_rng = root.substream(labels::INIT);
        let z = initial_point(&config.init, &config.target, &config.projection, &mut init_rng)?;
        let cfg = &config.projection;
        let state = match kind {
            ChainKind::Sps | ChainKind::Gsps => sphere_state(z, &config.target, cfg)?,
            ChainKind::Rsps => {
                let x = cfg.forward(&z)?;
                let log_density = euclidean_log_density(&x, &config.target, cfg)?;
                ChainState { z, x, log_density }
            }
            ChainKind::Rwm => {
                let x = cfg.forward(&z)?;
                let log_density = config.target.log_density_unchecked(&x);
                ChainState { z, x, log_density }
            }
        };
        Ok(Self {
            kind,
            state,
            rng: root.substream(labels::PROPOSAL),
            config,
        })
    }

    /// Replaces the current state with the image of `x`.
    pub fn set_position(&mut self, x: &[f64]) -> Result<()> {
        let cfg = &self.config.projection;
        let z = cfg.inverse(x)?;
        let target = &self.config.target;
        self.state = match self.kind {
            ChainKind::Sps | ChainKind::Gsps => sphere_state(z, target, cfg)?,
            ChainKind::Rsps => ChainState {
                z,
                x: x.to_vec(),
                log_density: euclidean_log_density(x, target, cfg)?,
            },
            ChainKind::Rwm => ChainState {
                z,
                x: x.to_vec(),
                log_density: target.log_density_unchecked(x),
            },
        };
        Ok(())
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn kind(&self) -> ChainKind {
        self.kind
    }

    pub fn config(&self) -> &RwmConfig {
        &self.config
    }

    pub fn step(&mut self) -> Result<StepOutcome> {
        let c = &self.config;
        let (next, out) = match self.kind {
            ChainKind::Sps => sps_step(&self.state, &c.target, &c.projection, c.h, &mut self.rng)?,
            ChainKind::Gsps => gsps_step(&self.state, &c.target, &c.projection, c.h, &mut self.rng)?,
            ChainKind::Rsps => rsps_step(&self.state, &c.target, &c.projection, c.h, &mut self.rng)?,
            ChainKind::Rwm => {
                let (x, lp, out) = rwm_step(&self.state.x, self.state.log_density, &c.target, c.h, &mut self.rng);
                if out.accepted {
                    let z = c.projection.inverse(&x)?;
                    (ChainState { z, x, log_density: lp }, out)
                } else {
                    (self.state.clone(), out)
                }
            }
        };
        if out.accepted {
            self.state = next;
        }
        Ok(out)
    }

    fn meta(&self) -> TraceMeta {
        TraceMeta {
            sampler: self.kind.name().to_string(),
            seed: self.config.seed,
            stream: self.config.stream,
            dim: self.config.target.dim(),
            h: Some(self.config.h),
            radius: self.config.projection.radius(),
            target: self.config.target.family_name().to_string(),
        }
    }
}

/// Runs `config.n_steps` transitions. Deterministic given the seed.
pub fn run_chain(config: RwmConfig, kind: ChainKind) -> Result<Trace> {
    let n = config.n_steps;
    let mut chain = Chain::new(config, kind)?;
    let mut states = Vec::with_capacity(n + 1);
    let mut latitudes = Vec::with_capacity(n + 1);
    let mut accepted = Vec::with_capacity(n);
    let mut log_ratios = Vec::with_capacity(n);
    states.push(chain.state.x.clone());
    latitudes.push(chain.state.z.latitude());
    for _ in 0..n {
        let out = chain.step()?;
        states.push(chain.state.x.clone());
        latitudes.push(chain.state.z.latitude());
        accepted.push(out.accepted);
        log_ratios.push(out.log_ratio);
    }
    Ok(Trace {
        states,
        latitudes,
        accepted,
        log_ratios,
        times: None,
        meta: chain.meta(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{Marginal, Scale};

    fn gaussian_cfg(d: usize, h: f64, n: usize, init: Init, seed: u64) -> RwmConfig {
        RwmConfig::new(TargetModel::standard_gaussian(d), h, n, init, seed)
    }

    #[test]
    fn zero_step_limit_returns_same_point() {
        let mut rng = RngStream::from_seed(1);
        let z = SpherePoint::new(rng.normal_vec(6)).unwrap();
        let p = sps_propose(&z, 1e-300, &mut rng).unwrap();
        for (a, b) in z.coords().iter().zip(p.coords()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn proposals_are_unit() {
        let mut rng = RngStream::from_seed(2);
        let z = SpherePoint::new(rng.normal_vec(11)).unwrap();
        for _ in 0..1000 {
            let p = sps_propose(&z, 0.7, &mut rng).unwrap();
            assert!((p.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn same_seed_same_trace() {
        let a = run_chain(gaussian_cfg(5, 0.3, 200, Init::UniformSphere, 9), ChainKind::Sps).unwrap();
        let b = run_chain(gaussian_cfg(5, 0.3, 200, Init::UniformSphere, 9), ChainKind::Sps).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_steps_keeps_initial_state() {
        let t = run_chain(gaussian_cfg(3, 0.3, 0, Init::SouthPole, 1), ChainKind::Sps).unwrap();
        assert_eq!(t.states.len(), 1);
        assert_eq!(t.states[0], vec![0.0; 3]);
        assert!(t.accepted.is_empty());
    }

    #[test]
    fn flat_student_t_always_accepts() {
        let d = 20;
        let target = TargetModel::isotropic_student_t(d, d as f64).unwrap();
        for h in [0.01, 0.1, 1.0] {
            let t = run_chain(
                RwmConfig::new(target.clone(), h, 2000, Init::UniformSphere, 3),
                ChainKind::Sps,
            )
            .unwrap();
            assert!(t.accepted.iter().all(|a| *a));
            assert!(t.log_ratios.iter().all(|r| r.abs() <= 1e-8));
        }
    }

    #[test]
    fn rejected_steps_leave_state_unchanged() {
        let t = run_chain(gaussian_cfg(10, 2.0, 500, Init::Stationary, 4), ChainKind::Sps).unwrap();
        assert!(t.accepted.iter().any(|a| !a));
        for (i, a) in t.accepted.iter().enumerate() {
            if !a {
                assert_eq!(t.states[i], t.states[i + 1]);
            }
        }
    }

    #[test]
    fn log_ratio_is_antisymmetric() {
        let target = TargetModel::product_iid(4, Marginal::scaled_student_t(5.0).unwrap());
        let cfg = ProjectionConfig::standard_default(4);
        let mut rng = RngStream::from_seed(5);
        for _ in 0..100 {
            let a = sphere_state(SpherePoint::new(rng.normal_vec(5)).unwrap(), &target, &cfg).unwrap();
            let b = sphere_state(SpherePoint::new(rng.normal_vec(5)).unwrap(), &target, &cfg).unwrap();
            let f = b.log_density - a.log_density;
            let r = a.log_density - b.log_density;
            assert!((f + r).abs() <= 1e-12);
        }
    }

    #[test]
    fn gsps_with_identity_matches_sps_bitwise() {
        let d = 6;
        let target = TargetModel::standard_gaussian(d);
        let std = RwmConfig::new(target.clone(), 0.4, 300, Init::UniformSphere, 11);
        let gen_cfg =
            ProjectionConfig::generalized(std.projection.radius(), vec![1.0; d], nalgebra::DMatrix::identity(d, d))
                .unwrap();
        let gen = std.clone().with_projection(gen_cfg);
        let a = run_chain(std, ChainKind::Sps).unwrap();
        let b = run_chain(gen, ChainKind::Gsps).unwrap();
        assert_eq!(a.states, b.states);
        assert_eq!(a.accepted, b.accepted);
    }

    #[test]
    fn gsps_requires_generalized() {
        let c = gaussian_cfg(3, 0.1, 10, Init::SouthPole, 1);
        assert!(run_chain(c, ChainKind::Gsps).is_err());
    }

    #[test]
    fn rsps_zero_step_accepts_same_point() {
        let d = 5;
        let cfg = ProjectionConfig::standard_default(d);
        let target = TargetModel::standard_gaussian(d);
        let mut rng = RngStream::from_seed(6);
        let z = cfg.inverse(&rng.normal_vec(d)).unwrap();
        let x = cfg.forward(&z).unwrap();
        let state = ChainState {
            log_density: euclidean_log_density(&x, &target, &cfg).unwrap(),
            z,
            x: x.clone(),
        };
        let (next, out) = rsps_step(&state, &target, &cfg, 1e-300, &mut rng).unwrap();
        assert!(out.accepted);
        assert!(out.log_ratio.abs() < 1e-12);
        for (a, b) in next.x.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn rsps_tail_coordinates_come_from_second_proposal() {
        let d = 4;
        let cfg = ProjectionConfig::standard_default(d);
        let z = SpherePoint::new(vec![0.1, 0.2, -0.3, 0.4, -0.5]).unwrap();
        let mut a = RngStream::from_seed(7);
        let mut b = a.clone();
        let x = rsps_propose(&z, &cfg, 0.2, &mut a).unwrap().unwrap();
        let _first = sps_propose(&z, 0.2, &mut b).unwrap();
        let second = cfg.forward(&sps_propose(&z, 0.2, &mut b).unwrap()).unwrap();
        assert_eq!(&x[1..], &second[1..]);
    }

    #[test]
    fn rwm_tiny_step_always_accepts() {
        let t = run_chain(gaussian_cfg(4, 1e-12, 500, Init::Stationary, 8), ChainKind::Rwm).unwrap();
        assert!(t.accepted.iter().all(|a| *a));
    }

    #[test]
    fn invalid_configs() {
        assert!(run_chain(gaussian_cfg(3, 0.0, 1, Init::SouthPole, 1), ChainKind::Sps).is_err());
        assert!(run_chain(gaussian_cfg(1, 0.1, 1, Init::SouthPole, 1), ChainKind::Rsps).is_err());
        assert!(run_chain(gaussian_cfg(3, 0.1, 1, Init::Point(vec![0.0; 2]), 1), ChainKind::Sps).is_err());
        let t = TargetModel::student_t(2.0, Scale::identity(3)).unwrap();
        let c = RwmConfig::new(t, 0.1, 1, Init::SouthPole, 1).with_projection(ProjectionConfig::standard_default(4));
        assert!(run_chain(c, ChainKind::Sps).is_err());
    }

    #[test]
    fn north_pole_start_is_valid() {
        let t = run_chain(gaussian_cfg(10, 1.0, 5, Init::NorthPole, 2), ChainKind::Sps).unwrap();
        assert!(t.latitudes[0] > 0.999_999);
    }
}
