//! First-arrival times of inhomogeneous Poisson processes.
//!
//! Two methods are provided: inversion of the integrated rate
//! `Lambda(t) = int_0^t chi(s) ds` against a unit exponential, and thinning
//! against a piecewise-constant bound. Both take the rate as a closure so that
//! synthetic intensities can be plugged in directly.

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClockMethod {
    Inversion,
    Thinning,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockSettings {
    pub method: ClockMethod,
    /// Cells per period `2 pi`; also sets the cell width for non-periodic rates.
    pub grid: usize,
    /// Relative tolerance of the per-cell quadrature.
    pub tolerance: f64,
    /// Multiplier on the grid maximum used as the thinning bound.
    pub safety: f64,
}

impl Default for ClockSettings {
    fn default() -> Self {
        Self {
            method: ClockMethod::Inversion,
            grid: 1024,
            tolerance: 1e-8,
            safety: 1.5,
        }
    }
}

impl ClockSettings {
    pub fn validate(&self) -> Result<()> {
        if self.grid < 4 || !self.grid.is_multiple_of(4) {
            return Err(Error::InvalidConfig(format!(
                "clock grid must be a positive multiple of 4, got {}",
                self.grid
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "clock tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !(self.safety >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "thinning safety factor must be >= 1, got {}",
                self.safety
            )));
        }
        Ok(())
    }

    fn cell_width(&self) -> f64 {
        std::f64::consts::TAU / self.grid as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Arrival {
    At(f64),
    NoneBefore(f64),
}

/// Counters accumulated across clock calls.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClockStats {
    /// Rate evaluations that were non-finite and replaced by the last finite value.
    pub capped: u64,
    /// Thinning proposals where the rate exceeded the bound.
    pub bound_violations: u64,
    pub rate_evaluations: u64,
}

/// Wraps a rate so that non-finite values are replaced by the last finite one.
struct Capped<F> {
    rate: F,
    last_finite: Option<f64>,
    max_finite: f64,
    first_bad: Option<f64>,
    stats: ClockStats,
}

impl<F: FnMut(f64) -> f64> Capped<F> {
    fn new(rate: F) -> Self {
        Self {
            rate,
            last_finite: None,
            max_finite: 0.0,
            first_bad: None,
            stats: ClockStats::default(),
        }
    }

    fn eval(&mut self, t: f64) -> f64 {
        self.stats.rate_evaluations += 1;
        let r = (self.rate)(t);
        if r.is_finite() {
            let r = r.max(0.0);
            self.last_finite = Some(r);
            self.max_finite = self.max_finite.max(r);
            r
        } else {
            self.stats.capped += 1;
            self.first_bad.get_or_insert(t);
            self.last_finite.unwrap_or(f64::NAN)
        }
    }

    fn check(&self) -> Result<()> {
        match (self.last_finite, self.first_bad) {
            (None, Some(at)) => Err(Error::Clock {
                at,
                last_finite: f64::NAN,
            }),
            _ => Ok(()),
        }
    }
}

fn non_finite<F>(c: &Capped<F>, a: f64) -> Error {
    Error::Clock {
        at: c.first_bad.unwrap_or(a),
        last_finite: c.last_finite.unwrap_or(f64::NAN),
    }
}

/// Absolute tolerance for an integral over `[a, b]` with estimate `est`.
fn abs_tol<F>(c: &Capped<F>, est: f64, a: f64, b: f64, tol: f64) -> f64 {
    tol * (est.abs() + (b - a) * c.max_finite).max(1e-300)
}

/// Adaptive Simpson over `[a, b]`.
fn cell_integral<F: FnMut(f64) -> f64>(c: &mut Capped<F>, a: f64, b: f64, tol: f64) -> Result<f64> {
    let cell = std::cell::RefCell::new(c);
    let coarse = {
        let mut c = cell.borrow_mut();
        (b - a) / 6.0 * (c.eval(a) + 4.0 * c.eval(0.5 * (a + b)) + c.eval(b))
    };
    let eps = abs_tol(&cell.borrow(), coarse, a, b, tol);
    let v = adaptive_simpson(|t| cell.borrow_mut().eval(t), a, b, eps);
    let c = cell.borrow();
    c.check()?;
    if !v.is_finite() {
        return Err(non_finite(&c, a));
    }
    Ok(v)
}

/// Composite Simpson over a block of four grid cells starting at `a` with
/// `f(a) = fa`, compared against Simpson on the doubled spacing; blocks where
/// the two differ beyond tolerance are refined adaptively. Returns the
/// integral and `f(a + 4w)`.
fn block_integral<F: FnMut(f64) -> f64>(c: &mut Capped<F>, a: f64, w: f64, fa: f64, tol: f64) -> Result<(f64, f64)> {
    let f = [
        fa,
        c.eval(a + w),
        c.eval(a + 2.0 * w),
        c.eval(a + 3.0 * w),
        c.eval(a + 4.0 * w),
    ];
    c.check()?;
    let coarse = 4.0 * w / 6.0 * (f[0] + 4.0 * f[2] + f[4]);
    let fine = w / 3.0 * (f[0] + 4.0 * f[1] + 2.0 * f[2] + 4.0 * f[3] + f[4]);
    let diff = fine - coarse;
    let v = if diff.abs() <= 15.0 * abs_tol(c, fine, a, a + 4.0 * w, tol) {
        fine + diff / 15.0
    } else {
        cell_integral(c, a, a + 2.0 * w, tol)? + cell_integral(c, a + 2.0 * w, a + 4.0 * w, tol)?
    };
    if !v.is_finite() {
        return Err(non_finite(c, a));
    }
    Ok((v, f[4]))
}

/// Solves `int_a^t rate = target` for `t` in `[a, b]`, where the integral over
/// the whole cell is at least `target`.
fn solve_in_cell<F: FnMut(f64) -> f64>(c: &mut Capped<F>, a: f64, b: f64, target: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (a, b);
    let mut t = a + (b - a) * 0.5;
    for _ in 0..200 {
        let f = cell_integral(c, a, t, tol)? - target;
        if f.abs() <= abs_tol(c, target, a, a, tol) || hi - lo <= 1e-14 * (1.0 + t.abs()) {
            return Ok(t);
        }
        if f > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let r = c.eval(t);
        let newton = if r > 0.0 { t - f / r } else { f64::NAN };
        t = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(t)
}

/// First arrival by integrated-rate inversion. With `period = Some(p)` the rate
/// is taken to be `p`-periodic and cell integrals are reused after one period.
pub fn first_arrival_inversion<F: FnMut(f64) -> f64>(
    rate: F,
    t_max: f64,
    period: Option<f64>,
    settings: &ClockSettings,
    rng: &mut RngStream,
    stats: &mut ClockStats,
) -> Result<Arrival> {
    let target = rng.standard_exponential();
    let mut c = Capped::new(rate);
    let out = inversion_inner(&mut c, target, t_max, period, settings);
    stats.capped += c.stats.capped;
    stats.rate_evaluations += c.stats.rate_evaluations;
    out
}

const INVERSION_BLOCK: usize = 4;

fn inversion_inner<F: FnMut(f64) -> f64>(
    c: &mut Capped<F>,
    target: f64,
    t_max: f64,
    period: Option<f64>,
    settings: &ClockSettings,
) -> Result<Arrival> {
    let tol = settings.tolerance;
    let w = match period {
        Some(p) => p / settings.grid as f64,
        None => settings.cell_width(),
    };
    let bw = w * INVERSION_BLOCK as f64;
    let blocks_per_period = period.map(|_| settings.grid / INVERSION_BLOCK);
    let mut cache: Vec<f64> = Vec::new();
    let mut acc = 0.0;
    let mut k: usize = 0;
    let mut offset = 0.0;
    // rate at the left end of block k, when known
    let mut left: Option<f64> = None;
    loop {
        let a = offset + bw * k as f64;
        if a >= t_max {
            return Ok(Arrival::NoneBefore(t_max));
        }
        let full = a + bw <= t_max;
        let idx = blocks_per_period.map(|n| k % n);
        let integral = match idx {
            Some(i) if i < cache.len() && full => {
                left = None;
                cache[i]
            }
            _ if full => {
                let fa = match left {
                    Some(f) => f,
                    None => {
                        let f = c.eval(a);
                        c.check()?;
                        f
                    }
                };
                let (v, fb) = block_integral(c, a, w, fa, tol)?;
                left = Some(fb);
                if idx == Some(cache.len()) {
                    cache.push(v);
                }
                v
            }
            _ => cell_integral(c, a, t_max, tol)?,
        };
        let b = if full { a + bw } else { t_max };
        if acc + integral >= target {
            let t = solve_in_cell(c, a, b, target - acc, tol)?;
            return Ok(Arrival::At(t));
        }
        acc += integral;
        k += 1;
        if let (Some(n), Some(p)) = (blocks_per_period, period) {
            if k == n && cache.len() == n {
                // one full period is integrated: skip whole periods
                let total: f64 = cache.iter().sum();
                if total <= 0.0 {
                    return Ok(Arrival::NoneBefore(t_max));
                }
                let skip = ((target - acc) / total).floor().max(0.0);
                let jump = offset + p * (1.0 + skip);
                if jump >= t_max {
                    return Ok(Arrival::NoneBefore(t_max));
                }
                acc += skip * total;
                offset = jump;
                k = 0;
                left = None;
            }
        }
    }
}

/// First arrival by thinning on blocks of 32 cells with bound
/// `safety * max(rate on the block's grid)`.
pub fn first_arrival_thinning<F: FnMut(f64) -> f64>(
    rate: F,
    t_max: f64,
    period: Option<f64>,
    settings: &ClockSettings,
    rng: &mut RngStream,
    stats: &mut ClockStats,
) -> Result<Arrival> {
    let mut c = Capped::new(rate);
    let out = thinning_inner(&mut c, t_max, period, settings, rng);
    stats.capped += c.stats.capped;
    stats.rate_evaluations += c.stats.rate_evaluations;
    stats.bound_violations += c.stats.bound_violations;
    out
}

const THINNING_BLOCK: usize = 32;

fn thinning_inner<F: FnMut(f64) -> f64>(
    c: &mut Capped<F>,
    t_max: f64,
    period: Option<f64>,
    settings: &ClockSettings,
    rng: &mut RngStream,
) -> Result<Arrival> {
    let w = match period {
        Some(p) => p / settings.grid as f64,
        None => settings.cell_width(),
    };
    let block = w * THINNING_BLOCK as f64;
    let mut start = 0.0;
    let mut any_positive = false;
    loop {
        if start >= t_max {
            return Ok(Arrival::NoneBefore(t_max));
        }
        if let Some(p) = period {
            if start >= p && !any_positive {
                return Ok(Arrival::NoneBefore(t_max));
            }
        }
        let end = (start + block).min(t_max);
        let mut bound = 0.0f64;
        for j in 0..=THINNING_BLOCK {
            let t = (start + w * j as f64).min(end);
            bound = bound.max(c.eval(t));
        }
        c.check()?;
        bound *= settings.safety;
        if bound > 0.0 {
            any_positive = true;
            let mut t = start;
            loop {
                t += rng.standard_exponential() / bound;
                if t >= end {
                    break;
                }
                let r = c.eval(t);
                if r > bound {
                    c.stats.bound_violations += 1;
                }
                if rng.uniform() * bound < r {
                    return Ok(Arrival::At(t));
                }
            }
        }
        start = end;
    }
}

/// Dispatches on `settings.method`.
pub fn first_arrival<F: FnMut(f64) -> f64>(
    rate: F,
    t_max: f64,
    period: Option<f64>,
    settings: &ClockSettings,
    rng: &mut RngStream,
    stats: &mut ClockStats,
) -> Result<Arrival> {
    match settings.method {
        ClockMethod::Inversion => first_arrival_inversion(rate, t_max, period, settings, rng, stats),
        ClockMethod::Thinning => first_arrival_thinning(rate, t_max, period, settings, rng, stats),
    }
}
