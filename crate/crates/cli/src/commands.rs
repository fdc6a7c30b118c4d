use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use stereo_mcmc::diagnostics::{chain_report, ess_per_switch, path_report, DiagnosticsReport, Observable};
use stereo_mcmc::io::{
    schema, write_acf, write_diagnostics, write_events, write_trace, Cell, DiagnosticsRow, EventColumns, TableWriter,
    TraceColumns, TUNING_HEADERS,
};
use stereo_mcmc::sbps::{bps_run, discretize_path, sbps_run, EuclideanState, EventPath, Horizon, PhaseState};
use stereo_mcmc::sps::{run_chain, Chain, ChainKind, Trace};
use stereo_mcmc::targets::{c_nu, c_nu_ratio};
use stereo_mcmc::theory::{ell_from_h, optimal_tuning, TuningReport};
use stereo_mcmc::{Marginal, RngStream};

use crate::config::{build_projection, h_for_acceptance, log_grid, Issue, LoadedConfig, RunPlan, SamplerPlan};
use crate::error::{io_err, CliError, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn flush(w: BufWriter<File>, path: &Path) -> Result<()> {
    w.into_inner()
        .map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e.into_error(),
        })?
        .sync_all()
        .map_err(io_err(path))
}

/// Writes with `f` into `path`, then flushes.
fn write_file<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(BufWriter<File>) -> stereo_mcmc::Result<BufWriter<File>>,
{
    let w = f(create(path)?)?;
    flush(w, path)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

fn snapshot(cfg: &LoadedConfig, out: &Path) -> Result<()> {
    write_text(&out.join("config.toml"), &cfg.snapshot())
}

enum PathOut {
    Sphere(EventPath<PhaseState>),
    Euclid(EventPath<EuclideanState>),
}

struct RunOutput {
    name: String,
    sampler: String,
    seed: u64,
    stream: u64,
    dim: usize,
    trace: Trace,
    path: Option<PathOut>,
    reports: Vec<DiagnosticsReport>,
    note: String,
}

fn execute(plan: &RunPlan, diag: &crate::config::DiagnosticsSettings) -> Result<RunOutput> {
    let (trace, path, seed, stream) = match &plan.plan {
        SamplerPlan::Chain { kind, config } => (run_chain(config.clone(), *kind)?, None, config.seed, config.stream),
        SamplerPlan::Sbps(c) => {
            let p = sbps_run(c)?;
            (
                discretize_path(&p, diag.samples_per_unit)?,
                Some(PathOut::Sphere(p)),
                c.seed,
                c.stream,
            )
        }
        SamplerPlan::Bps(c) => {
            let p = bps_run(c)?;
            (
                discretize_path(&p, diag.samples_per_unit)?,
                Some(PathOut::Euclid(p)),
                c.seed,
                c.stream,
            )
        }
    };
    let mut reports = Vec::new();
    let note = match &path {
        None if trace.n_steps() == 0 => {
            warn!("{}: no transitions, skipping diagnostics", plan.name);
            "0 steps".to_string()
        }
        None => {
            for g in &diag.observables {
                reports.push(chain_report(&trace, *g, diag.max_lag, diag.batches)?);
            }
            format!("{} steps", trace.n_steps())
        }
        Some(p) => {
            for g in &diag.observables {
                let r = match p {
                    PathOut::Sphere(p) => path_report(p, *g, diag.max_lag, diag.batches, diag.samples_per_unit),
                    PathOut::Euclid(p) => path_report(p, *g, diag.max_lag, diag.batches, diag.samples_per_unit),
                };
                reports.push(r?);
            }
            let (counts, t) = match p {
                PathOut::Sphere(p) => (p.counts, p.total_time),
                PathOut::Euclid(p) => (p.counts, p.total_time),
            };
            format!(
                "{} bounces, {} refreshes ({} forced), time {:.3}",
                counts.bounce, counts.refresh, counts.forced_refresh, t
            )
        }
    };
    Ok(RunOutput {
        name: plan.name.clone(),
        sampler: plan.plan.kind_name().to_string(),
        seed,
        stream,
        dim: trace.dim(),
        trace,
        path,
        reports,
        note,
    })
}

fn fmt_report(r: &DiagnosticsReport) -> String {
    let mut s = format!(
        "  {:<26} acceptance {:.4}  esjd/d {:.5}  ess {:.1}",
        r.observable.name(),
        r.acceptance_rate,
        r.esjd_per_dim,
        r.ess
    );
    if r.ess_per_switch.is_finite() {
        let _ = write!(s, "  ess/switch {:.4}", r.ess_per_switch);
    }
    s
}

/// Runs every `[[sampler]]` and writes traces, events, diagnostics, ACFs, the
/// config snapshot and a summary into `out`. Returns the summary text.
pub fn cmd_run(cfg: &LoadedConfig, out: &Path) -> Result<String> {
    let resolved = cfg.config.resolve().map_err(|i| cfg.error(i))?;
    let plans = cfg.config.plans(&resolved).map_err(|i| cfg.error(i))?;
    ensure_dir(out)?;
    snapshot(cfg, out)?;

    let diag = &resolved.diagnostics;
    let outputs: Vec<RunOutput> = plans.par_iter().map(|p| execute(p, diag)).collect::<Result<_>>()?;

    let single = outputs.len() == 1;
    let mut rows = Vec::new();
    let mut summary = String::new();
    for o in &outputs {
        let dir: PathBuf = if single { out.to_path_buf() } else { out.join(&o.name) };
        ensure_dir(&dir)?;
        if resolved.output.trace {
            write_file(&dir.join("trace.csv"), |w| {
                write_trace(w, &o.trace, resolved.output.columns)
            })?;
            let ec = match resolved.output.columns {
                TraceColumns::All => EventColumns::All,
                TraceColumns::Compressed => EventColumns::Compressed,
            };
            match &o.path {
                Some(PathOut::Sphere(p)) => write_file(&dir.join("events.csv"), |w| write_events(w, p, ec))?,
                Some(PathOut::Euclid(p)) => write_file(&dir.join("events.csv"), |w| write_events(w, p, ec))?,
                None => {}
            }
        }
        let acfs: Vec<(String, Vec<f64>)> = o
            .reports
            .iter()
            .map(|r| (r.observable.name().to_string(), r.acf.clone()))
            .collect();
        write_file(&dir.join("acf.csv"), |w| write_acf(w, o.seed, o.stream, &acfs))?;

        let _ = writeln!(
            summary,
            "{} ({}, d = {}, stream {}): {}",
            o.name, o.sampler, o.dim, o.stream, o.note
        );
        for r in &o.reports {
            let _ = writeln!(summary, "{}", fmt_report(r));
            rows.push(DiagnosticsRow {
                run: o.name.clone(),
                sampler: o.sampler.clone(),
                dim: o.dim,
                seed: o.seed,
                stream: o.stream,
                report: r.clone(),
            });
        }
    }
    write_file(&out.join("diagnostics.csv"), |w| write_diagnostics(w, &rows))?;
    write_text(&out.join("summary.txt"), &summary)?;
    info!("wrote {} run(s) to {}", outputs.len(), out.display());
    Ok(summary)
}

pub const EFFICIENCY_HEADERS: [&str; 10] = [
    "radius_multiplier",
    "radius",
    "h",
    "ell",
    "acceptance",
    "esjd",
    "esjd_per_dim",
    "n_steps",
    "seed",
    "stream",
];

struct SweepPoint {
    multiplier: f64,
    radius: f64,
    h: f64,
}

/// Acceptance rate and mean squared jump, accumulated without storing the chain.
fn streaming_efficiency(chain: &mut Chain, n: usize) -> Result<(f64, f64)> {
    let mut accepted = 0usize;
    let mut jump = 0.0;
    let mut prev = chain.state().x.clone();
    for _ in 0..n {
        if chain.step()?.accepted {
            accepted += 1;
            let x = &chain.state().x;
            jump += x.iter().zip(&prev).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            prev.copy_from_slice(x);
        }
    }
    Ok((accepted as f64 / n as f64, jump / n as f64))
}

/// ESJD efficiency curve over the `[sweep]` grid (times radius multipliers).
pub fn cmd_sweep_esjd(cfg: &LoadedConfig, out: &Path) -> Result<String> {
    let c = &cfg.config;
    let sweep = c
        .sweep
        .as_ref()
        .ok_or_else(|| cfg.error(Issue::new("", None, "sweep-esjd needs a [sweep] section")))?;
    let resolved = c.resolve().map_err(|i| cfg.error(i))?;
    let idx = c
        .sampler_index(sweep.sampler.as_deref(), "sweep")
        .map_err(|i| cfg.error(i))?;
    let base = crate::config::build_sampler(idx, &c.samplers[idx], &resolved).map_err(|i| cfg.error(i))?;
    let SamplerPlan::Chain { kind, config: base } = base else {
        return Err(cfg.error(Issue::new(
            "sweep",
            Some("sampler"),
            "sweep-esjd needs a discrete-time sampler",
        )));
    };
    let d = resolved.target.dim();
    if base.n_steps == 0 {
        return Err(cfg.error(Issue::new("sampler", Some("n_steps"), "sweep points need n_steps > 0")));
    }

    let multipliers = sweep.radius_multipliers.clone().unwrap_or_else(|| vec![1.0]);
    let given = [
        sweep.h_grid.is_some(),
        sweep.h_range.is_some(),
        sweep.acceptance_targets.is_some(),
    ];
    if given.iter().filter(|g| **g).count() != 1 {
        return Err(cfg.error(Issue::new(
            "sweep",
            None,
            "give exactly one of h_grid, h_range, acceptance_targets",
        )));
    }
    if multipliers.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
        return Err(cfg.error(Issue::new(
            "sweep",
            Some("radius_multipliers"),
            "multipliers must be positive",
        )));
    }
    let mut points = Vec::new();
    for &m in &multipliers {
        let base_mult = c.projection.radius_multiplier.unwrap_or(1.0);
        let proj = build_projection(&c.projection, &resolved.target, base_mult * m).map_err(|i| cfg.error(i))?;
        let hs = if let Some(g) = &sweep.h_grid {
            g.clone()
        } else if let Some(r) = &sweep.h_range {
            if !(r.min > 0.0 && r.max >= r.min) {
                return Err(cfg.error(Issue::new("sweep", Some("h_range"), "need 0 < min <= max")));
            }
            log_grid(r.min, r.max, r.points)
        } else {
            let e = resolved.target.roughness().ok_or_else(|| {
                cfg.error(Issue::new(
                    "sweep",
                    Some("acceptance_targets"),
                    "acceptance targets need a target with known roughness",
                ))
            })?;
            let lambda = proj.radius().powi(2) / d as f64;
            sweep
                .acceptance_targets
                .as_ref()
                .unwrap()
                .iter()
                .map(|a| h_for_acceptance(*a, e, lambda, d))
                .collect::<stereo_mcmc::Result<Vec<_>>>()
                .map_err(|e| cfg.error(Issue::new("sweep", Some("acceptance_targets"), e.to_string())))?
        };
        for h in hs {
            if !(h > 0.0) || !h.is_finite() {
                return Err(cfg.error(Issue::new(
                    "sweep",
                    None,
                    format!("grid step must be positive, got {h}"),
                )));
            }
            points.push((
                SweepPoint {
                    multiplier: m,
                    radius: proj.radius(),
                    h,
                },
                proj.clone(),
            ));
        }
    }

    ensure_dir(out)?;
    snapshot(cfg, out)?;
    let streams = c.root_stream().split(points.len());
    let rows: Vec<(f64, f64)> = points
        .par_iter()
        .zip(streams.par_iter())
        .map(|((pt, proj), rng)| {
            let mut rc = base.clone().with_projection(proj.clone());
            rc.h = pt.h;
            rc.seed = rng.seed();
            rc.stream = rng.stream_id();
            let mut chain = Chain::new(rc, kind)?;
            streaming_efficiency(&mut chain, base.n_steps)
        })
        .collect::<Result<_>>()?;

    let headers: Vec<String> = EFFICIENCY_HEADERS.iter().map(|s| s.to_string()).collect();
    let meta = [
        ("seed", c.seed.to_string()),
        ("stream", c.stream.to_string()),
        ("sampler", kind.name().to_string()),
        ("target", resolved.target.family_name().to_string()),
        ("dim", d.to_string()),
    ];
    let path = out.join("efficiency.csv");
    let mut tw = TableWriter::new(create(&path)?, schema::EFFICIENCY, &meta, &headers)?;
    let mut summary = format!("{} sweep, d = {d}, {} points\n", kind.name(), points.len());
    for (((pt, _), rng), (acc, esjd)) in points.iter().zip(&streams).zip(&rows) {
        let ell = match kind {
            ChainKind::Rwm => pt.h * (d as f64).sqrt(),
            _ => ell_from_h(pt.h, d)?,
        };
        tw.row(&[
            pt.multiplier.into(),
            pt.radius.into(),
            pt.h.into(),
            ell.into(),
            (*acc).into(),
            (*esjd).into(),
            (esjd / d as f64).into(),
            base.n_steps.into(),
            rng.seed().into(),
            rng.stream_id().into(),
        ])?;
    }
    flush(tw.finish()?, &path)?;
    if let Some(best) = best_points(&points, &rows) {
        summary.push_str(&best);
    }
    write_text(&out.join("summary.txt"), &summary)?;
    Ok(summary)
}

/// Per radius multiplier, the grid point with the largest ESJD.
fn best_points(points: &[(SweepPoint, stereo_mcmc::ProjectionConfig)], rows: &[(f64, f64)]) -> Option<String> {
    let mut s = String::new();
    let mut mults: Vec<f64> = points.iter().map(|(p, _)| p.multiplier).collect();
    mults.dedup();
    for m in mults {
        let best = points
            .iter()
            .zip(rows)
            .filter(|((p, _), _)| p.multiplier == m)
            .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))?;
        let ((p, _), (acc, esjd)) = best;
        let _ = writeln!(
            s,
            "  R = {:.4} ({}x): max esjd {:.4} at h = {:.5}, acceptance {:.3}",
            p.radius, m, esjd, p.h, acc
        );
    }
    Some(s)
}

pub const ESS_CURVE_HEADERS: [&str; 11] = [
    "refresh_rate",
    "sampler",
    "observable",
    "replicates",
    "ess_per_switch",
    "ess_per_switch_min",
    "ess_per_switch_max",
    "ess",
    "events",
    "refresh_fraction",
    "total_time",
];

struct CurveRun {
    ess: Vec<f64>,
    eps: Vec<f64>,
    events: usize,
    refresh_fraction: f64,
    total_time: f64,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// ESS per switch of SBPS and BPS over a refresh-rate grid.
pub fn cmd_ess_curve(cfg: &LoadedConfig, out: &Path) -> Result<String> {
    let c = &cfg.config;
    let sec = c
        .ess_curve
        .as_ref()
        .ok_or_else(|| cfg.error(Issue::new("", None, "ess-curve needs an [ess_curve] section")))?;
    let resolved = c.resolve().map_err(|i| cfg.error(i))?;
    let diag = &resolved.diagnostics;
    let samplers = sec
        .samplers
        .clone()
        .unwrap_or_else(|| vec!["sbps".into(), "bps".into()]);
    for s in &samplers {
        if s != "sbps" && s != "bps" {
            return Err(cfg.error(Issue::new(
                "ess_curve",
                Some("samplers"),
                format!("unknown sampler {s:?}; expected sbps or bps"),
            )));
        }
    }
    let replicates = sec.replicates.unwrap_or(10);
    if replicates == 0 {
        return Err(cfg.error(Issue::new(
            "ess_curve",
            Some("replicates"),
            "need at least one replicate",
        )));
    }
    let horizon = match (sec.total_time, sec.n_events) {
        (Some(_), Some(_)) => {
            return Err(cfg.error(Issue::new(
                "ess_curve",
                Some("n_events"),
                "give either total_time or n_events",
            )))
        }
        (Some(t), None) => Horizon::TotalTime(t),
        (None, n) => Horizon::EventCount(n.unwrap_or(1000)),
    };
    for r in &sec.refresh_grid {
        if !(*r >= 0.0) || !r.is_finite() {
            return Err(cfg.error(Issue::new(
                "ess_curve",
                Some("refresh_grid"),
                format!("bad refresh rate {r}"),
            )));
        }
    }

    let mut jobs = Vec::new();
    for &rate in &sec.refresh_grid {
        for s in &samplers {
            for rep in 0..replicates {
                jobs.push((rate, s.as_str(), rep));
            }
        }
    }
    ensure_dir(out)?;
    snapshot(cfg, out)?;
    let streams = c.root_stream().split(jobs.len());
    let runs: Vec<CurveRun> = jobs
        .par_iter()
        .zip(streams.par_iter())
        .map(|(&(rate, s, _), rng)| curve_run(&resolved, s, rate, horizon, rng, diag))
        .collect::<Result<_>>()?;

    let headers: Vec<String> = ESS_CURVE_HEADERS.iter().map(|s| s.to_string()).collect();
    let meta = [
        ("seed", c.seed.to_string()),
        ("stream", c.stream.to_string()),
        ("target", resolved.target.family_name().to_string()),
        ("dim", resolved.target.dim().to_string()),
        ("samples_per_unit", diag.samples_per_unit.to_string()),
    ];
    let path = out.join("ess_curve.csv");
    let mut tw = TableWriter::new(create(&path)?, schema::ESS_CURVE, &meta, &headers)?;
    let mut summary = String::new();
    for (gi, chunk) in runs.chunks(replicates).enumerate() {
        let (rate, s, _) = jobs[gi * replicates];
        for (oi, g) in diag.observables.iter().enumerate() {
            let mut eps: Vec<f64> = chunk.iter().map(|r| r.eps[oi]).collect();
            let mut ess: Vec<f64> = chunk.iter().map(|r| r.ess[oi]).collect();
            let lo = eps.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = eps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let m = median(&mut eps);
            let n = replicates as f64;
            tw.row(&[
                rate.into(),
                s.into(),
                g.name().into(),
                replicates.into(),
                m.into(),
                lo.into(),
                hi.into(),
                median(&mut ess).into(),
                Cell::F(chunk.iter().map(|r| r.events as f64).sum::<f64>() / n),
                Cell::F(chunk.iter().map(|r| r.refresh_fraction).sum::<f64>() / n),
                Cell::F(chunk.iter().map(|r| r.total_time).sum::<f64>() / n),
            ])?;
            let _ = writeln!(
                summary,
                "refresh {rate:<5} {s:<4} {:<26} median ess/switch {m:.4}",
                g.name()
            );
        }
    }
    flush(tw.finish()?, &path)?;
    write_text(&out.join("summary.txt"), &summary)?;
    Ok(summary)
}

fn curve_run(
    r: &crate::config::Resolved,
    sampler: &str,
    rate: f64,
    horizon: Horizon,
    rng: &RngStream,
    diag: &crate::config::DiagnosticsSettings,
) -> Result<CurveRun> {
    let observe = |g: Observable, res: stereo_mcmc::Result<stereo_mcmc::diagnostics::EssPerSwitch>| {
        res.map_err(|source| CliError::Run {
            context: format!("{sampler} at refresh rate {rate}, {}", g.name()),
            source,
        })
    };
    let mut out = CurveRun {
        ess: vec![],
        eps: vec![],
        events: 0,
        refresh_fraction: 0.0,
        total_time: 0.0,
    };
    macro_rules! collect {
        ($path:expr) => {{
            let p = $path;
            for g in &diag.observables {
                let e = observe(*g, ess_per_switch(&p, *g, diag.batches, diag.samples_per_unit))?;
                out.ess.push(e.ess);
                out.eps.push(e.ess_per_switch);
            }
            out.events = p.counts.non_horizon();
            out.refresh_fraction = p.refresh_fraction();
            out.total_time = p.total_time;
        }};
    }
    if sampler == "sbps" {
        let mut c = stereo_mcmc::sbps::SbpsConfig::new(r.target.clone(), rate, horizon, rng.seed());
        c.projection = r.projection.clone();
        c.init = stereo_mcmc::sps::Init::Stationary;
        c.stream = rng.stream_id();
        collect!(sbps_run(&c)?);
    } else {
        let mut c = stereo_mcmc::sbps::BpsConfig::new(r.target.clone(), rate, horizon, rng.seed());
        c.stream = rng.stream_id();
        collect!(bps_run(&c)?);
    }
    Ok(out)
}

pub const TUNING_PREFIX: [&str; 3] = ["nu", "c_nu", "c_nu_ratio"];

/// Tuning reports for the `[tuning]` nu list (or the Gaussian marginal).
pub fn cmd_tuning(cfg: &LoadedConfig, out: &Path) -> Result<String> {
    let sec = cfg
        .config
        .tuning
        .as_ref()
        .ok_or_else(|| cfg.error(Issue::new("", None, "tuning needs a [tuning] section")))?;
    let d = sec.dim;
    let mut rows: Vec<(f64, f64, f64, TuningReport)> = Vec::new();
    match sec.marginal.as_deref() {
        None | Some("student_t") => {
            let nus = sec.nu.clone().ok_or_else(|| {
                cfg.error(Issue::new(
                    "tuning",
                    Some("marginal"),
                    "student_t tuning needs a nu list",
                ))
            })?;
            for nu in nus {
                let bad = |e: stereo_mcmc::Error| cfg.error(Issue::new("tuning", Some("nu"), e.to_string()));
                let e = c_nu(nu).map_err(bad)?;
                let ratio = c_nu_ratio(nu).map_err(bad)?;
                let report = optimal_tuning(e, d).map_err(bad)?;
                rows.push((nu, e, ratio, report));
            }
        }
        Some("gaussian") => {
            let e = Marginal::StandardGaussian.roughness();
            let report =
                optimal_tuning(e, d).map_err(|e| cfg.error(Issue::new("tuning", Some("marginal"), e.to_string())))?;
            rows.push((f64::INFINITY, e, f64::INFINITY, report));
        }
        Some(other) => {
            return Err(cfg.error(Issue::new(
                "tuning",
                Some("marginal"),
                format!("unknown marginal {other:?}; expected student_t or gaussian"),
            )))
        }
    }

    ensure_dir(out)?;
    snapshot(cfg, out)?;
    let headers: Vec<String> = TUNING_PREFIX
        .iter()
        .chain(TUNING_HEADERS.iter())
        .map(|s| s.to_string())
        .collect();
    let path = out.join("tuning.csv");
    let mut tw = TableWriter::new(
        create(&path)?,
        schema::TUNING,
        &[("seed", "none".into()), ("stream", "none".into())],
        &headers,
    )?;
    let mut table = format!(
        "{:>6} {:>8} {:>9} {:>8} {:>9} {:>8} {:>9} {:>9}\n",
        "nu", "C_nu", "ratio", "ell", "h", "accept", "esjd", "speed"
    );
    for (nu, e, ratio, r) in &rows {
        tw.row(&[
            (*nu).into(),
            (*e).into(),
            (*ratio).into(),
            r.dim.into(),
            r.ell.into(),
            r.h.into(),
            r.lambda.into(),
            r.roughness.into(),
            r.predicted_acceptance.into(),
            r.predicted_esjd.into(),
            r.diffusion_speed.into(),
            r.ell_numeric.into(),
            r.esjd_max_numeric.into(),
        ])?;
        let _ = writeln!(
            table,
            "{:>6} {:>8.4} {:>9.4} {:>8.4} {:>9.6} {:>8.4} {:>9.4} {:>9.4}",
            nu, e, ratio, r.ell, r.h, r.predicted_acceptance, r.predicted_esjd, r.diffusion_speed
        );
    }
    flush(tw.finish()?, &path)?;
    write_text(&out.join("summary.txt"), &table)?;
    Ok(table)
}

/// Flushes stdout after printing a summary.
pub fn print(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    let _ = out.flush();
}
