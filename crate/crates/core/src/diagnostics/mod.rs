//! Chain and path diagnostics.

pub mod fit;

use crate::error::{Error, Result};
use crate::sbps::{discretize_path, EventPath, PathState};
use crate::sps::Trace;

/// Default number of batches for batch-means ESS.
pub const DEFAULT_BATCHES: usize = 50;

fn check_trace(trace: &Trace) -> Result<()> {
    if trace.states.len() < 2 {
        Err(Error::EmptyTrace(format!("{} states", trace.states.len())))
    } else {
        Ok(())
    }
}

/// Mean squared jump `|X(t+1) - X(t)|^2` over all transitions.
pub fn esjd(trace: &Trace) -> Result<f64> {
    Ok(esjd_per_coordinate(trace)?.iter().sum())
}

/// Per-coordinate contributions to [`esjd`].
pub fn esjd_per_coordinate(trace: &Trace) -> Result<Vec<f64>> {
    check_trace(trace)?;
    let d = trace.states[0].len();
    let n = (trace.states.len() - 1) as f64;
    let mut out = vec![0.0; d];
    for w in trace.states.windows(2) {
        for (o, (a, b)) in out.iter_mut().zip(w[0].iter().zip(&w[1])) {
            *o += (b - a) * (b - a);
        }
    }
    out.iter_mut().for_each(|v| *v /= n);
    Ok(out)
}

pub fn acceptance_rate(trace: &Trace) -> Result<f64> {
    if trace.accepted.is_empty() {
        return Err(Error::EmptyTrace("no transitions".into()));
    }
    Ok(trace.accepted.iter().filter(|a| **a).count() as f64 / trace.accepted.len() as f64)
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, v)
}

/// Biased sample autocorrelation at lags `0..=max_lag`.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if series.len() <= max_lag {
        return Err(Error::DegenerateSeries(format!(
            "length {} does not exceed max lag {max_lag}",
            series.len()
        )));
    }
    let (m, v) = mean_var(series);
    if !(v > 0.0) {
        return Err(Error::DegenerateSeries("constant series".into()));
    }
    let n = series.len();
    let c: Vec<f64> = series.iter().map(|x| x - m).collect();
    Ok((0..=max_lag)
        .map(|k| {
            if k == 0 {
                return 1.0;
            }
            let s: f64 = c[..n - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum();
            s / n as f64 / v
        })
        .collect())
}

/// Batch-means ESS of a series sampled every `dt` time units.
///
/// With `T = n dt`, batch integrals `X_i = sqrt(B/T) int_batch g` (midpoint
/// rule), `sigma^2 = var(X_i)` and the plug-in variance `(1/T) int g^2 - mean^2`,
/// `ESS = T var / sigma^2`. For a discrete chain use `dt = 1`.
pub fn batch_means_ess(series: &[f64], dt: f64, batches: usize) -> Result<f64> {
    if batches < 2 {
        return Err(Error::InvalidConfig("need at least two batches".into()));
    }
    let n = series.len();
    if n < 2 * batches {
        return Err(Error::InsufficientPath(format!("{n} samples for {batches} batches")));
    }
    let (_, var) = mean_var(series);
    if !(var > 0.0) {
        return Err(Error::DegenerateSeries("constant observable".into()));
    }
    let total = n as f64 * dt;
    let b = batches as f64;
    let xs: Vec<f64> = (0..batches)
        .map(|i| {
            let lo = i * n / batches;
            let hi = (i + 1) * n / batches;
            // rescale so every batch integral covers T/B even when n % B != 0
            let len = (hi - lo) as f64 * dt;
            let integral: f64 = series[lo..hi].iter().sum::<f64>() * dt * (total / b) / len;
            (b / total).sqrt() * integral
        })
        .collect();
    let xm = xs.iter().sum::<f64>() / b;
    let sigma2 = xs.iter().map(|x| (x - xm) * (x - xm)).sum::<f64>() / (b - 1.0);
    if !(sigma2 > 0.0) {
        return Err(Error::DegenerateSeries("zero batch-means variance".into()));
    }
    Ok(total * var / sigma2)
}

/// Observables used for ESS.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    FirstCoordinate,
    /// `sqrt(d) (|x|^2 / d - 1)`, the negative log-density statistic of a
    /// standard Gaussian up to affine rescaling.
    NormStatistic,
    FirstCoordinateSquared,
}

impl Observable {
    pub const ALL: [Observable; 3] = [
        Observable::FirstCoordinate,
        Observable::NormStatistic,
        Observable::FirstCoordinateSquared,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Observable::FirstCoordinate => "first_coordinate",
            Observable::NormStatistic => "norm_statistic",
            Observable::FirstCoordinateSquared => "first_coordinate_squared",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name() == s)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Observable::FirstCoordinate => x[0],
            Observable::NormStatistic => {
                let d = x.len() as f64;
                let n2: f64 = x.iter().map(|v| v * v).sum();
                d.sqrt() * (n2 / d - 1.0)
            }
            Observable::FirstCoordinateSquared => x[0] * x[0],
        }
    }

    pub fn series(&self, trace: &Trace) -> Vec<f64> {
        trace.states.iter().map(|x| self.eval(x)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssPerSwitch {
    pub ess: f64,
    pub ess_per_switch: f64,
    pub events: usize,
}

/// ESS of `g` along a continuous-time path, and ESS divided by the number of
/// bounce and refresh events.
pub fn ess_per_switch<S: PathState>(
    path: &EventPath<S>,
    g: Observable,
    batches: usize,
    samples_per_unit: usize,
) -> Result<EssPerSwitch> {
    let trace = discretize_path(path, samples_per_unit)?;
    ess_per_switch_from_trace(&trace, path.counts.non_horizon(), g, batches, samples_per_unit)
}

/// Same as [`ess_per_switch`] on an already discretized path.
pub fn ess_per_switch_from_trace(
    trace: &Trace,
    events: usize,
    g: Observable,
    batches: usize,
    samples_per_unit: usize,
) -> Result<EssPerSwitch> {
    let series = g.series(trace);
    let ess = batch_means_ess(&series, 1.0 / samples_per_unit as f64, batches)?;
    Ok(EssPerSwitch {
        ess,
        ess_per_switch: if events == 0 { f64::NAN } else { ess / events as f64 },
        events,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub esjd: f64,
    pub esjd_per_dim: f64,
    pub acceptance_rate: f64,
    pub acf: Vec<f64>,
    pub ess: f64,
    /// `NaN` for discrete-time chains.
    pub ess_per_switch: f64,
    pub batch_count: usize,
    pub observable: Observable,
}

/// Diagnostics of a discrete chain for one observable.
pub fn chain_report(trace: &Trace, g: Observable, max_lag: usize, batches: usize) -> Result<DiagnosticsReport> {
    let e = esjd(trace)?;
    let series = g.series(trace);
    let lag = max_lag.min(series.len().saturating_sub(1));
    Ok(DiagnosticsReport {
        esjd: e,
        esjd_per_dim: e / trace.dim() as f64,
        acceptance_rate: acceptance_rate(trace)?,
        acf: acf(&series, lag).unwrap_or_default(),
        ess: batch_means_ess(&series, 1.0, batches).unwrap_or(f64::NAN),
        ess_per_switch: f64::NAN,
        batch_count: batches,
        observable: g,
    })
}

/// Diagnostics of a continuous-time path for one observable.
pub fn path_report<S: PathState>(
    path: &EventPath<S>,
    g: Observable,
    max_lag: usize,
    batches: usize,
    samples_per_unit: usize,
) -> Result<DiagnosticsReport> {
    let trace = discretize_path(path, samples_per_unit)?;
    let series = g.series(&trace);
    let lag = max_lag.min(series.len().saturating_sub(1));
    let e = esjd(&trace)?;
    let eps = ess_per_switch_from_trace(&trace, path.counts.non_horizon(), g, batches, samples_per_unit)?;
    Ok(DiagnosticsReport {
        esjd: e,
        esjd_per_dim: e / trace.dim() as f64,
        acceptance_rate: 1.0,
        acf: acf(&series, lag).unwrap_or_default(),
        ess: eps.ess,
        ess_per_switch: eps.ess_per_switch,
        batch_count: batches,
        observable: g,
    })
}
