use crate::error::{Error, Result};
use crate::sps::{Trace, TraceMeta};

use super::{EventPath, PathState};

pub const DEFAULT_SAMPLES_PER_UNIT: usize = 5;

/// Midpoint grid `(k + 1/2) / spu` for `k = 0 .. floor(T spu)`.
///
/// Averages over this grid are the composite midpoint rule for the time
/// integral over `[0, floor(T spu)/spu]`, second-order accurate in `1/spu`.
pub fn sample_times(total_time: f64, samples_per_unit: usize) -> Vec<f64> {
    let spu = samples_per_unit as f64;
    let n = (total_time * spu + 1e-9).floor() as usize;
    (0..n).map(|k| (k as f64 + 0.5) / spu).collect()
}

/// Evaluates the flow of `path` on the [`sample_times`] grid and maps each
/// sample to R^d.
pub fn discretize_path<S: PathState>(path: &EventPath<S>, samples_per_unit: usize) -> Result<Trace> {
    if samples_per_unit == 0 {
        return Err(Error::InvalidConfig("samples per unit must be positive".into()));
    }
    let times = sample_times(path.total_time, samples_per_unit);
    let mut states = Vec::with_capacity(times.len());
    let mut latitudes = Vec::with_capacity(times.len());
    let mut i = 0;
    let (mut t0, mut anchor) = (0.0, &path.initial);
    for &t in &times {
        while i < path.events.len() && path.events[i].t <= t {
            t0 = path.events[i].t;
            anchor = &path.events[i].state;
            i += 1;
        }
        let s = anchor.flowed(t - t0);
        states.push(s.image(path.projection.as_ref())?);
        latitudes.push(s.latitude());
    }
    let n = states.len().saturating_sub(1);
    Ok(Trace {
        states,
        latitudes,
        accepted: vec![true; n],
        log_ratios: vec![0.0; n],
        times: Some(times),
        meta: TraceMeta {
            sampler: path.sampler.clone(),
            seed: path.seed,
            stream: path.stream,
            dim: path.dim(),
            h: None,
            radius: path.projection.as_ref().map_or(f64::NAN, |p| p.radius()),
            target: path.target.clone(),
        },
    })
}
