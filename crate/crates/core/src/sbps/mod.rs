//! Bouncy particle samplers: the spherical sampler (great-circle flow) and
//! the Euclidean baseline (straight-line flow).

mod bps;
pub mod clock;
mod discretize;

use std::f64::consts::TAU;

use log::warn;

use crate::error::{Error, Result};
use crate::geometry::{self, ProjectionConfig, SpherePoint};
use crate::rng::{labels, RngStream};
use crate::sps::{initial_point, Init};
use crate::targets::TargetModel;

pub use bps::{bps_run, bps_run_with_gradient, BpsConfig, EuclideanState};
pub use clock::{Arrival, ClockMethod, ClockSettings, ClockStats};
pub use discretize::{discretize_path, sample_times, DEFAULT_SAMPLES_PER_UNIT};

/// Position and unit tangent velocity on the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub z: SpherePoint,
    pub v: Vec<f64>,
}

impl PhaseState {
    /// Normalizes `z`, projects `v` onto the tangent space and normalizes it.
    pub fn orthonormalize(&mut self) {
        self.z.renormalize();
        let c = self.z.dot(&self.v);
        for (vi, zi) in self.v.iter_mut().zip(self.z.coords()) {
            *vi -= c * zi;
        }
        normalize(&mut self.v);
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= n);
    n
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// States that can be advanced along a deterministic flow and observed in R^d.
pub trait PathState: Clone + std::fmt::Debug {
    fn flowed(&self, t: f64) -> Self;
    fn velocity(&self) -> &[f64];
    /// The position in R^d (through `projection` for sphere states).
    fn image(&self, projection: Option<&ProjectionConfig>) -> Result<Vec<f64>>;
    /// Latitude for sphere states, `NaN` otherwise.
    fn latitude(&self) -> f64;
}

impl PathState for PhaseState {
    fn flowed(&self, t: f64) -> Self {
        flow(self, t)
    }

    fn velocity(&self) -> &[f64] {
        &self.v
    }

    fn image(&self, projection: Option<&ProjectionConfig>) -> Result<Vec<f64>> {
        let cfg = projection.ok_or_else(|| Error::InvalidConfig("sphere path without projection".into()))?;
        cfg.forward(&self.z)
    }

    fn latitude(&self) -> f64 {
        self.z.latitude()
    }
}

/// Great-circle flow `z(t) = cos t z + sin t v`, `v(t) = cos t v - sin t z`.
pub fn flow(state: &PhaseState, t: f64) -> PhaseState {
    let (s, c) = t.sin_cos();
    let z = state.z.coords();
    let zc: Vec<f64> = z.iter().zip(&state.v).map(|(a, b)| c * a + s * b).collect();
    let v: Vec<f64> = z.iter().zip(&state.v).map(|(a, b)| c * b - s * a).collect();
    PhaseState {
        z: SpherePoint::from_unit(zc),
        v,
    }
}

/// Tangent gradients below this fraction of the ambient representative are
/// rounding noise and treated as zero.
const TANGENT_ROUNDING: f64 = 1e-12;

/// `max(0, -v . grad)` with the tangent gradient of `log pi_S`.
pub fn bounce_intensity(state: &PhaseState, target: &TargetModel, cfg: &ProjectionConfig) -> Result<f64> {
    geometry::check_target(target, cfg)?;
    if state.z.dim() != cfg.dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim(),
            got: state.z.dim(),
        });
    }
    FlowIntensity::new(state, target, cfg).eval(0.0)
}

/// The bounce intensity along the great circle through `start`, as a
/// function of flow time. Reuses its buffers between evaluations.
pub struct FlowIntensity<'a> {
    start: &'a PhaseState,
    target: &'a TargetModel,
    cfg: &'a ProjectionConfig,
    z: Vec<f64>,
    v: Vec<f64>,
    grad: Vec<f64>,
    ws: geometry::GradWorkspace,
}

impl<'a> FlowIntensity<'a> {
    /// `target` and `cfg` must agree in dimension with `start`.
    pub fn new(start: &'a PhaseState, target: &'a TargetModel, cfg: &'a ProjectionConfig) -> Self {
        let n = start.v.len();
        Self {
            start,
            target,
            cfg,
            z: vec![0.0; n],
            v: vec![0.0; n],
            grad: vec![0.0; n],
            ws: geometry::GradWorkspace::new(cfg.dim()),
        }
    }

    pub fn eval(&mut self, t: f64) -> Result<f64> {
        let (s, c) = t.sin_cos();
        for (i, (a, b)) in self.start.z.coords().iter().zip(&self.start.v).enumerate() {
            self.z[i] = c * a + s * b;
            self.v[i] = c * b - s * a;
        }
        geometry::ambient_grad_into(&self.z, self.target, self.cfg, &mut self.ws, &mut self.grad)?;
        let scale = dot(&self.grad, &self.grad).sqrt();
        for _ in 0..2 {
            let k = dot(&self.z, &self.grad);
            for (g, zi) in self.grad.iter_mut().zip(&self.z) {
                *g -= k * zi;
            }
        }
        if dot(&self.grad, &self.grad).sqrt() <= TANGENT_ROUNDING * (1.0 + scale) {
            return Ok(0.0);
        }
        Ok((-dot(&self.v, &self.grad)).max(0.0))
    }
}

/// `v - 2 (v . g / g . g) g`.
pub fn reflect(v: &[f64], g: &[f64]) -> Result<Vec<f64>> {
    let gg = dot(g, g);
    if !(gg.sqrt() > 1e-12) {
        return Err(Error::DegenerateGradient(gg.sqrt()));
    }
    let c = 2.0 * dot(v, g) / gg;
    Ok(v.iter().zip(g).map(|(a, b)| a - c * b).collect())
}

/// Reflects the velocity against the tangent gradient of `log pi_S` at `z`.
pub fn reflect_velocity(state: &PhaseState, target: &TargetModel, cfg: &ProjectionConfig) -> Result<Vec<f64>> {
    let g = geometry::tangent_grad_log_target(&state.z, target, cfg)?;
    let mut v = reflect(&state.v, &g)?;
    geometry::project_tangent(&state.z, &mut v);
    normalize(&mut v);
    Ok(v)
}

/// Uniform unit vector in the tangent space at `z`.
pub fn refresh_velocity(z: &SpherePoint, rng: &mut RngStream) -> Result<Vec<f64>> {
    for _ in 0..8 {
        let mut v = rng.normal_vec(z.coords().len());
        geometry::project_tangent(z, &mut v);
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-12 {
            v.iter_mut().for_each(|a| *a /= n);
            return Ok(v);
        }
    }
    Err(Error::DegenerateDraw)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    TotalTime(f64),
    /// Number of bounce and refresh events.
    EventCount(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Bounce,
    Refresh,
    Horizon,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Bounce => "bounce",
            EventKind::Refresh => "refresh",
            EventKind::Horizon => "horizon",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event<S> {
    pub t: f64,
    pub kind: EventKind,
    /// State just after the event.
    pub state: S,
    /// `v . grad` with the incoming velocity (negative at bounces).
    pub v_dot_grad: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EventCounts {
    pub bounce: usize,
    pub refresh: usize,
    /// Refreshes forced by a bounce clock failure; included in `refresh`.
    pub forced_refresh: usize,
}

impl EventCounts {
    pub fn non_horizon(&self) -> usize {
        self.bounce + self.refresh
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventPath<S> {
    pub initial: S,
    pub events: Vec<Event<S>>,
    pub total_time: f64,
    pub counts: EventCounts,
    pub clock: ClockStats,
    /// Set for sphere paths; used to map states to R^d.
    pub projection: Option<ProjectionConfig>,
    /// The run could never produce an event and was stopped after one rotation.
    pub no_events_possible: bool,
    pub sampler: String,
    pub target: String,
    pub seed: u64,
    pub stream: u64,
}

impl<S: PathState> EventPath<S> {
    /// The state at global time `t` in `[0, total_time]`.
    pub fn state_at(&self, t: f64) -> S {
        let i = self.events.partition_point(|e| e.t <= t);
        let (t0, s) = if i == 0 {
            (0.0, &self.initial)
        } else {
            (self.events[i - 1].t, &self.events[i - 1].state)
        };
        s.flowed(t - t0)
    }

    pub fn dim(&self) -> usize {
        self.initial.velocity().len() - usize::from(self.projection.is_some())
    }

    /// Fraction of non-horizon events that are refreshes.
    pub fn refresh_fraction(&self) -> f64 {
        let n = self.counts.non_horizon();
        if n == 0 {
            0.0
        } else {
            self.counts.refresh as f64 / n as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct SbpsConfig {
    pub target: TargetModel,
    pub projection: ProjectionConfig,
    pub refresh_rate: f64,
    pub horizon: Horizon,
    pub init: Init,
    pub seed: u64,
    pub stream: u64,
    pub clock: ClockSettings,
}

impl SbpsConfig {
    /// `R = sqrt(d)`, default clock, uniform start on the sphere.
    pub fn new(target: TargetModel, refresh_rate: f64, horizon: Horizon, seed: u64) -> Self {
        let projection = ProjectionConfig::standard_default(target.dim());
        Self {
            target,
            projection,
            refresh_rate,
            horizon,
            init: Init::UniformSphere,
            seed,
            stream: 0,
            clock: ClockSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        geometry::check_target(&self.target, &self.projection)?;
        check_common(self.refresh_rate, self.horizon)?;
        self.clock.validate()
    }
}

pub(crate) fn check_common(refresh_rate: f64, horizon: Horizon) -> Result<()> {
    if !(refresh_rate >= 0.0) || !refresh_rate.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "refresh rate must be nonnegative and finite, got {refresh_rate}"
        )));
    }
    match horizon {
        Horizon::TotalTime(t) if !(t > 0.0) || !t.is_finite() => Err(Error::InvalidConfig(format!(
            "total time must be positive and finite, got {t}"
        ))),
        Horizon::EventCount(0) => Err(Error::InvalidConfig("event count must be positive".into())),
        _ => Ok(()),
    }
}

/// Runs the spherical bouncy particle sampler. Deterministic given the seed.
///
/// Randomness is split into independent streams for the initial state, the
/// bounce clock, refresh times and refresh velocities.
pub fn sbps_run(config: &SbpsConfig) -> Result<EventPath<PhaseState>> {
    config.validate()?;
    let target = &config.target;
    let cfg = &config.projection;
    if config.refresh_rate == 0.0 {
        warn!("refresh rate 0: the sampler is not irreducible without refreshment");
    }
    let root = RngStream::new(config.seed, config.stream);
    let mut init_rng = root.substream(labels::INIT);
    let mut clock_rng = root.substream(labels::CLOCK);
    let mut time_rng = root.substream(labels::REFRESH_TIME);
    let mut vel_rng = root.substream(labels::REFRESH_VELOCITY);

    let z = initial_point(&config.init, target, cfg, &mut init_rng)?;
    let v = refresh_velocity(&z, &mut vel_rng)?;
    let initial = PhaseState { z, v };
    let mut state = initial.clone();
    let mut t = 0.0;
    let mut events = Vec::new();
    let mut counts = EventCounts::default();
    let mut stats = ClockStats::default();
    let mut no_events_possible = false;

    let v_dot_grad = |s: &PhaseState| {
        geometry::tangent_grad_log_target(&s.z, target, cfg)
            .map(|g| dot(&s.v, &g))
            .unwrap_or(f64::NAN)
    };

    loop {
        let remaining = match config.horizon {
            Horizon::TotalTime(total) => total - t,
            Horizon::EventCount(_) => f64::INFINITY,
        };
        let tau_refresh = if config.refresh_rate > 0.0 {
            time_rng.exponential(config.refresh_rate)?
        } else {
            f64::INFINITY
        };
        let t_max = tau_refresh.min(remaining);
        let start = state.clone();
        let mut intensity = FlowIntensity::new(&start, target, cfg);
        let rate = |s: f64| intensity.eval(s).unwrap_or(f64::NAN);
        let arrival = clock::first_arrival(rate, t_max, Some(TAU), &config.clock, &mut clock_rng, &mut stats);
        match arrival {
            Ok(Arrival::At(tau)) => {
                let mut s = flow(&state, tau);
                s.orthonormalize();
                let vg = v_dot_grad(&s);
                s.v = reflect_velocity(&s, target, cfg)?;
                s.orthonormalize();
                t += tau;
                counts.bounce += 1;
                events.push(Event {
                    t,
                    kind: EventKind::Bounce,
                    state: s.clone(),
                    v_dot_grad: vg,
                });
                state = s;
            }
            Ok(Arrival::NoneBefore(_)) if tau_refresh.is_finite() && tau_refresh <= remaining => {
                let mut s = flow(&state, tau_refresh);
                s.orthonormalize();
                let vg = v_dot_grad(&s);
                s.v = refresh_velocity(&s.z, &mut vel_rng)?;
                t += tau_refresh;
                counts.refresh += 1;
                events.push(Event {
                    t,
                    kind: EventKind::Refresh,
                    state: s.clone(),
                    v_dot_grad: vg,
                });
                state = s;
            }
            Ok(Arrival::NoneBefore(_)) => {
                let step = if remaining.is_finite() {
                    remaining
                } else {
                    warn!("no bounce or refresh event can occur; stopping after one rotation");
                    no_events_possible = true;
                    TAU
                };
                let mut s = flow(&state, step);
                s.orthonormalize();
                t = match config.horizon {
                    Horizon::TotalTime(total) => total,
                    Horizon::EventCount(_) => t + step,
                };
                events.push(Event {
                    t,
                    kind: EventKind::Horizon,
                    v_dot_grad: v_dot_grad(&s),
                    state: s,
                });
                break;
            }
            Err(Error::Clock { at, .. }) => {
                warn!("bounce clock failed at flow time {at}; forcing a refresh");
                let mut s = flow(&state, at);
                s.orthonormalize();
                s.v = refresh_velocity(&s.z, &mut vel_rng)?;
                t += at;
                counts.refresh += 1;
                counts.forced_refresh += 1;
                events.push(Event {
                    t,
                    kind: EventKind::Refresh,
                    state: s.clone(),
                    v_dot_grad: f64::NAN,
                });
                state = s;
            }
            Err(e) => return Err(e),
        }
        if let Horizon::EventCount(n) = config.horizon {
            if counts.non_horizon() >= n {
                events.push(Event {
                    t,
                    kind: EventKind::Horizon,
                    v_dot_grad: v_dot_grad(&state),
                    state: state.clone(),
                });
                break;
            }
        }
    }
    Ok(EventPath {
        initial,
        total_time: t,
        events,
        counts,
        clock: stats,
        projection: Some(cfg.clone()),
        no_events_possible,
        sampler: "sbps".into(),
        target: target.family_name().into(),
        seed: config.seed,
        stream: config.stream,
    })
}
