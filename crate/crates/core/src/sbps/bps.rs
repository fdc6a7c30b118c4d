use log::warn;

use crate::error::{Error, Result};
use crate::geometry::ProjectionConfig;
use crate::rng::{labels, RngStream};
use crate::targets::TargetModel;

use super::clock::{self, Arrival, ClockSettings, ClockStats};
use super::{check_common, dot, normalize, reflect, Event, EventCounts, EventKind, EventPath, Horizon, PathState};

/// Position and unit velocity in R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl PathState for EuclideanState {
    fn flowed(&self, t: f64) -> Self {
        Self {
            x: self.x.iter().zip(&self.v).map(|(a, b)| a + t * b).collect(),
            v: self.v.clone(),
        }
    }

    fn velocity(&self) -> &[f64] {
        &self.v
    }

    fn image(&self, _projection: Option<&ProjectionConfig>) -> Result<Vec<f64>> {
        Ok(self.x.clone())
    }

    fn latitude(&self) -> f64 {
        f64::NAN
    }
}

#[derive(Debug, Clone)]
pub struct BpsConfig {
    pub target: TargetModel,
    pub refresh_rate: f64,
    pub horizon: Horizon,
    /// Starting point; `None` draws it from the target.
    pub init: Option<Vec<f64>>,
    pub seed: u64,
    pub stream: u64,
    pub clock: ClockSettings,
}

impl BpsConfig {
    pub fn new(target: TargetModel, refresh_rate: f64, horizon: Horizon, seed: u64) -> Self {
        Self {
            target,
            refresh_rate,
            horizon,
            init: None,
            seed,
            stream: 0,
            clock: ClockSettings::default(),
        }
    }
}

fn unit_velocity(d: usize, rng: &mut RngStream) -> Vec<f64> {
    loop {
        let mut v = rng.normal_vec(d);
        if normalize(&mut v) > 1e-12 {
            return v;
        }
    }
}

/// Euclidean bouncy particle sampler on `config.target`.
pub fn bps_run(config: &BpsConfig) -> Result<EventPath<EuclideanState>> {
    let target = &config.target;
    let root = RngStream::new(config.seed, config.stream);
    let mut init_rng = root.substream(labels::INIT);
    let x0 = match &config.init {
        Some(x) if x.len() != target.dim() => {
            return Err(Error::DimensionMismatch {
                expected: target.dim(),
                got: x.len(),
            })
        }
        Some(x) => x.clone(),
        None => target.sample(&mut init_rng),
    };
    let mut path = bps_run_with_gradient(
        |x, out| out.copy_from_slice(&target.grad_log_density(x).expect("dimension checked")),
        x0,
        config.refresh_rate,
        config.horizon,
        &root,
        &config.clock,
    )?;
    path.target = target.family_name().into();
    Ok(path)
}

/// BPS driven by an arbitrary gradient of `log pi`, starting at `x0`, with
/// substreams drawn from `root`.
pub fn bps_run_with_gradient<G: Fn(&[f64], &mut [f64])>(
    grad: G,
    x0: Vec<f64>,
    refresh_rate: f64,
    horizon: Horizon,
    root: &RngStream,
    clock_settings: &ClockSettings,
) -> Result<EventPath<EuclideanState>> {
    check_common(refresh_rate, horizon)?;
    clock_settings.validate()?;
    if refresh_rate == 0.0 && matches!(horizon, Horizon::EventCount(_)) {
        warn!("BPS without refreshment under an event-count horizon may never terminate on flat regions");
    }
    let d = x0.len();
    let mut clock_rng = root.substream(labels::CLOCK);
    let mut time_rng = root.substream(labels::REFRESH_TIME);
    let mut vel_rng = root.substream(labels::REFRESH_VELOCITY);

    let initial = EuclideanState {
        x: x0,
        v: unit_velocity(d, &mut vel_rng),
    };
    let mut state = initial.clone();
    let mut t = 0.0;
    let mut events = Vec::new();
    let mut counts = EventCounts::default();
    let mut stats = ClockStats::default();
    let mut g = vec![0.0; d];

    let v_dot_grad = |s: &EuclideanState, g: &mut [f64]| {
        grad(&s.x, g);
        dot(&s.v, g)
    };

    loop {
        let remaining = match horizon {
            Horizon::TotalTime(total) => total - t,
            Horizon::EventCount(_) => f64::INFINITY,
        };
        let tau_refresh = if refresh_rate > 0.0 {
            time_rng.exponential(refresh_rate)?
        } else {
            f64::INFINITY
        };
        let t_max = tau_refresh.min(remaining);
        let start = state.clone();
        let mut buf = vec![0.0; d];
        let rate = |s: f64| {
            let p = start.flowed(s);
            grad(&p.x, &mut buf);
            (-dot(&p.v, &buf)).max(0.0)
        };
        match clock::first_arrival(rate, t_max, None, clock_settings, &mut clock_rng, &mut stats)? {
            Arrival::At(tau) => {
                let mut s = state.flowed(tau);
                let vg = v_dot_grad(&s, &mut g);
                s.v = reflect(&s.v, &g)?;
                normalize(&mut s.v);
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
            Arrival::NoneBefore(_) if tau_refresh.is_finite() && tau_refresh <= remaining => {
                let mut s = state.flowed(tau_refresh);
                let vg = v_dot_grad(&s, &mut g);
                s.v = unit_velocity(d, &mut vel_rng);
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
            Arrival::NoneBefore(_) => {
                if !remaining.is_finite() {
                    return Err(Error::DegenerateCase(
                        "no bounce or refresh event can occur under an event-count horizon".into(),
                    ));
                }
                let s = state.flowed(remaining);
                t = match horizon {
                    Horizon::TotalTime(total) => total,
                    Horizon::EventCount(_) => t + remaining,
                };
                events.push(Event {
                    t,
                    kind: EventKind::Horizon,
                    v_dot_grad: v_dot_grad(&s, &mut g),
                    state: s,
                });
                break;
            }
        }
        if let Horizon::EventCount(n) = horizon {
            if counts.non_horizon() >= n {
                events.push(Event {
                    t,
                    kind: EventKind::Horizon,
                    v_dot_grad: v_dot_grad(&state, &mut g),
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
        projection: None,
        no_events_possible: false,
        sampler: "bps".into(),
        target: "custom".into(),
        seed: root.seed(),
        stream: root.stream_id(),
    })
}
