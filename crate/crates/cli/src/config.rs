//! Experiment configuration.
//!
//! A config is a TOML document:
//!
//! ```toml
//! seed = 7
//! stream = 0
//!
//! [target]
//! family = "student_t"        # gaussian | student_t | product_iid
//! dim = 100
//! nu = 100.0                  # student_t
//! # mean = [...]              # gaussian; zero by default
//! # lambda = [...]            # scale spectrum, or { log_uniform = [0.1, 10.0] }
//! # rotation = "random"       # identity (default) | random
//! # marginal = "student_t"    # product_iid: gaussian | student_t
//! # marginal_nu = 10.0
//!
//! [projection]
//! mode = "standard"           # standard | generalized
//! radius = "sqrt_d"           # sqrt_d | trace | <number>
//! radius_multiplier = 1.0
//!
//! [[sampler]]
//! name = "sps"
//! kind = "sps"                # sps | gsps | rsps | rwm | sbps | bps
//! h = 0.1                     # or "auto_0.234"; or give ell instead
//! n_steps = 10000             # discrete samplers
//! # total_time = 100.0        # sbps / bps; or n_events
//! # refresh_rate = 1.0
//! init = "stationary"         # north_pole | south_pole | uniform | stationary
//!                             # | { constant = 10.0 } | { point = [...] }
//! # clock = { method = "inversion", grid = 1024, tolerance = 1e-8, safety = 1.5 }
//!
//! [diagnostics]
//! observables = ["first_coordinate", "norm_statistic"]
//! batches = 50
//! max_lag = 100
//! samples_per_unit = 5
//!
//! [output]
//! dir = "out"
//! trace = true
//! columns = "all"             # all | compressed
//! ```
//!
//! plus the optional `[sweep]`, `[ess_curve]` and `[tuning]` sections read by
//! the matching subcommands.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use stereo_mcmc::diagnostics::{Observable, DEFAULT_BATCHES};
use stereo_mcmc::io::TraceColumns;
use stereo_mcmc::sbps::{BpsConfig, ClockMethod, ClockSettings, Horizon, SbpsConfig, DEFAULT_SAMPLES_PER_UNIT};
use stereo_mcmc::sps::{ChainKind, Init, RwmConfig};
use stereo_mcmc::targets::Family;
use stereo_mcmc::theory::{clt_mean_var, expected_accept, h_from_ell, optimal_tuning, LARGE_STEP_H};
use stereo_mcmc::{Marginal, ProjectionConfig, RngStream, Scale, TargetModel};

use crate::error::{io_err, CliError, Result};
use crate::presets;

/// Sub-stream labels for randomness drawn while resolving a config.
const LAMBDA_STREAM: u64 = 0xC0_0001;
const ROTATION_STREAM: u64 = 0xC0_0002;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
    pub target: Option<TargetSection>,
    #[serde(default)]
    pub projection: ProjectionSection,
    #[serde(default, rename = "sampler", skip_serializing_if = "Vec::is_empty")]
    pub samplers: Vec<SamplerSection>,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub output: OutputSection,
    pub sweep: Option<SweepSection>,
    pub ess_curve: Option<EssCurveSection>,
    pub tuning: Option<TuningSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub family: String,
    pub dim: usize,
    pub nu: Option<f64>,
    pub mean: Option<Vec<f64>>,
    pub lambda: Option<LambdaSpec>,
    pub rotation: Option<String>,
    pub marginal: Option<String>,
    pub marginal_nu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    List(Vec<f64>),
    LogUniform { log_uniform: [f64; 2] },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionSection {
    pub mode: Option<String>,
    pub radius: Option<RadiusSpec>,
    pub radius_multiplier: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RadiusSpec {
    Value(f64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    pub name: Option<String>,
    pub kind: String,
    pub h: Option<StepSpec>,
    pub ell: Option<f64>,
    pub n_steps: Option<usize>,
    pub total_time: Option<f64>,
    pub n_events: Option<usize>,
    pub refresh_rate: Option<f64>,
    pub init: Option<InitSpec>,
    pub clock: Option<ClockSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepSpec {
    Value(f64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitSpec {
    Named(String),
    Constant { constant: f64 },
    Point { point: Vec<f64> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockSection {
    pub method: Option<String>,
    pub grid: Option<usize>,
    pub tolerance: Option<f64>,
    pub safety: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub observables: Option<Vec<String>>,
    pub batches: Option<usize>,
    pub max_lag: Option<usize>,
    pub samples_per_unit: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
    pub trace: Option<bool>,
    pub columns: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Name of the `[[sampler]]` to sweep; the first one by default.
    pub sampler: Option<String>,
    pub h_grid: Option<Vec<f64>>,
    pub h_range: Option<RangeSpec>,
    pub acceptance_targets: Option<Vec<f64>>,
    pub radius_multipliers: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EssCurveSection {
    pub refresh_grid: Vec<f64>,
    pub replicates: Option<usize>,
    pub samplers: Option<Vec<String>>,
    pub n_events: Option<usize>,
    pub total_time: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningSection {
    pub nu: Option<Vec<f64>>,
    /// `student_t` (default) or `gaussian`.
    pub marginal: Option<String>,
    pub dim: usize,
}

/// Where a config problem sits: a table (with its index for arrays of
/// tables) and optionally a key inside it.
#[derive(Debug, Clone)]
pub struct Issue {
    table: String,
    index: usize,
    key: Option<&'static str>,
    msg: String,
}

impl Issue {
    pub fn new(table: &str, key: Option<&'static str>, msg: impl Into<String>) -> Self {
        Self {
            table: table.to_string(),
            index: 0,
            key,
            msg: msg.into(),
        }
    }

    fn sampler(index: usize, key: Option<&'static str>, msg: impl Into<String>) -> Self {
        Self {
            table: "sampler".into(),
            index,
            key,
            msg: msg.into(),
        }
    }
}

/// A parsed config together with its source text, for line-referenced errors.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub origin: String,
    source: String,
}

impl LoadedConfig {
    pub fn parse(source: &str, origin: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(source).map_err(|e| CliError::Config {
            origin: origin.to_string(),
            line: e.span().map(|s| line_of_offset(source, s.start)),
            msg: e.message().to_string(),
        })?;
        Ok(Self {
            config,
            origin: origin.to_string(),
            source: source.to_string(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn from_preset(name: &str) -> Result<Self> {
        let text =
            presets::get(name).ok_or_else(|| CliError::UnknownPreset(name.to_string(), presets::NAMES.join(", ")))?;
        Self::parse(text, &format!("preset {name}"))
    }

    /// Turns an [`Issue`] into a config error pointing at its line.
    pub fn error(&self, issue: Issue) -> CliError {
        CliError::Config {
            origin: self.origin.clone(),
            line: locate(&self.source, &issue.table, issue.index, issue.key),
            msg: issue.msg,
        }
    }

    /// TOML text of the effective config, after command-line overrides.
    pub fn snapshot(&self) -> String {
        toml::to_string(&self.config).expect("config serializes")
    }
}

fn line_of_offset(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

/// 1-based line of `key` in the `index`-th `[table]` / `[[table]]`, or of the
/// table header itself when `key` is `None` or not written out.
fn locate(source: &str, table: &str, index: usize, key: Option<&str>) -> Option<usize> {
    let mut current = String::new();
    let mut seen = 0usize;
    let mut header = None;
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            let name = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if name == table {
                seen += 1;
                if seen == index + 1 {
                    header = Some(i + 1);
                }
            }
            current = name;
            continue;
        }
        let in_table = if table.is_empty() {
            current.is_empty()
        } else {
            current == table && seen == index + 1
        };
        if let (true, Some(k)) = (in_table, key) {
            if let Some(rest) = line.strip_prefix(k) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}

pub type IssueResult<T> = std::result::Result<T, Issue>;

/// Everything needed by `run` and the sweeps, with defaults filled in.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub target: TargetModel,
    pub projection: ProjectionConfig,
    pub diagnostics: DiagnosticsSettings,
    pub output: OutputSettings,
}

#[derive(Debug, Clone)]
pub struct DiagnosticsSettings {
    pub observables: Vec<Observable>,
    pub batches: usize,
    pub max_lag: usize,
    pub samples_per_unit: usize,
}

#[derive(Debug, Clone)]
pub struct OutputSettings {
    pub trace: bool,
    pub columns: TraceColumns,
}

#[derive(Debug, Clone)]
pub enum SamplerPlan {
    Chain { kind: ChainKind, config: RwmConfig },
    Sbps(SbpsConfig),
    Bps(BpsConfig),
}

impl SamplerPlan {
    pub fn kind_name(&self) -> &'static str {
        match self {
            SamplerPlan::Chain { kind, .. } => kind.name(),
            SamplerPlan::Sbps(_) => "sbps",
            SamplerPlan::Bps(_) => "bps",
        }
    }

    /// Replaces the root stream id.
    pub fn set_stream(&mut self, seed: u64, stream: u64) {
        match self {
            SamplerPlan::Chain { config, .. } => {
                config.seed = seed;
                config.stream = stream;
            }
            SamplerPlan::Sbps(c) => {
                c.seed = seed;
                c.stream = stream;
            }
            SamplerPlan::Bps(c) => {
                c.seed = seed;
                c.stream = stream;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunPlan {
    pub name: String,
    pub plan: SamplerPlan,
}

impl ExperimentConfig {
    pub fn root_stream(&self) -> RngStream {
        RngStream::new(self.seed, self.stream)
    }

    pub fn resolve(&self) -> IssueResult<Resolved> {
        let section = self
            .target
            .as_ref()
            .ok_or_else(|| Issue::new("", None, "missing [target] section"))?;
        let target = build_target(section, &self.root_stream())?;
        let projection = build_projection(
            &self.projection,
            &target,
            self.projection.radius_multiplier.unwrap_or(1.0),
        )?;
        Ok(Resolved {
            target,
            projection,
            diagnostics: self.diagnostics_settings()?,
            output: self.output_settings()?,
        })
    }

    pub fn diagnostics_settings(&self) -> IssueResult<DiagnosticsSettings> {
        let d = &self.diagnostics;
        let observables = match &d.observables {
            None => vec![Observable::FirstCoordinate],
            Some(names) => names
                .iter()
                .map(|n| {
                    Observable::parse(n).ok_or_else(|| {
                        let known: Vec<&str> = Observable::ALL.iter().map(|o| o.name()).collect();
                        Issue::new(
                            "diagnostics",
                            Some("observables"),
                            format!("unknown observable {n:?}; expected one of {}", known.join(", ")),
                        )
                    })
                })
                .collect::<IssueResult<_>>()?,
        };
        let batches = d.batches.unwrap_or(DEFAULT_BATCHES);
        if batches < 2 {
            return Err(Issue::new("diagnostics", Some("batches"), "need at least 2 batches"));
        }
        let samples_per_unit = d.samples_per_unit.unwrap_or(DEFAULT_SAMPLES_PER_UNIT);
        if samples_per_unit == 0 {
            return Err(Issue::new("diagnostics", Some("samples_per_unit"), "must be positive"));
        }
        Ok(DiagnosticsSettings {
            observables,
            batches,
            max_lag: d.max_lag.unwrap_or(100),
            samples_per_unit,
        })
    }

    fn output_settings(&self) -> IssueResult<OutputSettings> {
        let columns = match self.output.columns.as_deref() {
            None | Some("all") => TraceColumns::All,
            Some("compressed") => TraceColumns::Compressed,
            Some(other) => {
                return Err(Issue::new(
                    "output",
                    Some("columns"),
                    format!("unknown column mode {other:?}; expected all or compressed"),
                ))
            }
        };
        Ok(OutputSettings {
            trace: self.output.trace.unwrap_or(true),
            columns,
        })
    }

    /// One plan per `[[sampler]]`, each on its own split stream.
    pub fn plans(&self, resolved: &Resolved) -> IssueResult<Vec<RunPlan>> {
        if self.samplers.is_empty() {
            return Err(Issue::new("", None, "no [[sampler]] sections"));
        }
        let streams = self.root_stream().split(self.samplers.len());
        let mut names = Vec::new();
        self.samplers
            .iter()
            .zip(streams)
            .enumerate()
            .map(|(i, (s, rng))| {
                let mut plan = build_sampler(i, s, resolved)?;
                plan.set_stream(rng.seed(), rng.stream_id());
                let name = s.name.clone().unwrap_or_else(|| plan.kind_name().to_string());
                if names.contains(&name) {
                    return Err(Issue::sampler(
                        i,
                        Some("name"),
                        format!("duplicate sampler name {name:?}"),
                    ));
                }
                names.push(name.clone());
                Ok(RunPlan { name, plan })
            })
            .collect()
    }

    /// Index of the sampler selected by `[sweep] sampler`.
    pub fn sampler_index(&self, name: Option<&str>, table: &str) -> IssueResult<usize> {
        match name {
            None if self.samplers.is_empty() => Err(Issue::new("", None, "no [[sampler]] sections")),
            None => Ok(0),
            Some(n) => self
                .samplers
                .iter()
                .position(|s| s.name.as_deref() == Some(n) || (s.name.is_none() && s.kind == n))
                .ok_or_else(|| Issue::new(table, Some("sampler"), format!("no sampler named {n:?}"))),
        }
    }
}

fn build_scale(section: &TargetSection, root: &RngStream) -> IssueResult<Scale> {
    let d = section.dim;
    let lambda = match &section.lambda {
        None => None,
        Some(LambdaSpec::List(l)) => {
            if l.len() != d {
                return Err(Issue::new(
                    "target",
                    Some("lambda"),
                    format!("lambda has {} entries, dim is {d}", l.len()),
                ));
            }
            Some(l.clone())
        }
        Some(LambdaSpec::LogUniform { log_uniform: [lo, hi] }) => {
            if !(*lo > 0.0 && hi >= lo) {
                return Err(Issue::new("target", Some("lambda"), "log_uniform needs 0 < lo <= hi"));
            }
            let mut rng = root.substream(LAMBDA_STREAM);
            let (a, b) = (lo.ln(), hi.ln());
            Some((0..d).map(|_| (a + (b - a) * rng.uniform()).exp()).collect())
        }
    };
    let rotation = match section.rotation.as_deref() {
        None | Some("identity") => None,
        Some("random") => {
            let mut rng = root.substream(ROTATION_STREAM);
            let m = DMatrix::from_fn(d, d, |_, _| rng.normal());
            Some(m.qr().q())
        }
        Some(other) => {
            return Err(Issue::new(
                "target",
                Some("rotation"),
                format!("unknown rotation {other:?}; expected identity or random"),
            ))
        }
    };
    let bad = |e: stereo_mcmc::Error| Issue::new("target", Some("lambda"), e.to_string());
    match (lambda, rotation) {
        (None, None) => Ok(Scale::identity(d)),
        (Some(l), None) => Scale::diagonal(l).map_err(bad),
        (l, Some(q)) => Scale::rotated(l.unwrap_or_else(|| vec![1.0; d]), q).map_err(bad),
    }
}

pub fn build_target(section: &TargetSection, root: &RngStream) -> IssueResult<TargetModel> {
    let d = section.dim;
    if d == 0 {
        return Err(Issue::new("target", Some("dim"), "dim must be positive"));
    }
    let err = |key, e: stereo_mcmc::Error| Issue::new("target", Some(key), e.to_string());
    match section.family.as_str() {
        "gaussian" => {
            let scale = build_scale(section, root)?;
            let mean = section.mean.clone().unwrap_or_else(|| vec![0.0; d]);
            if mean.len() != d {
                return Err(Issue::new(
                    "target",
                    Some("mean"),
                    format!("mean has {} entries, dim is {d}", mean.len()),
                ));
            }
            TargetModel::gaussian(mean, scale).map_err(|e| err("mean", e))
        }
        "student_t" => {
            let nu = section
                .nu
                .ok_or_else(|| Issue::new("target", Some("family"), "student_t needs nu"))?;
            let scale = build_scale(section, root)?;
            TargetModel::student_t(nu, scale).map_err(|e| err("nu", e))
        }
        "product_iid" => {
            let marginal = match section.marginal.as_deref() {
                None | Some("student_t") => {
                    let nu = section.marginal_nu.ok_or_else(|| {
                        Issue::new("target", Some("marginal"), "student_t marginal needs marginal_nu")
                    })?;
                    Marginal::scaled_student_t(nu).map_err(|e| err("marginal_nu", e))?
                }
                Some("gaussian") => Marginal::StandardGaussian,
                Some(other) => {
                    return Err(Issue::new(
                        "target",
                        Some("marginal"),
                        format!("unknown marginal {other:?}; expected gaussian or student_t"),
                    ))
                }
            };
            Ok(TargetModel::product_iid(d, marginal))
        }
        other => Err(Issue::new(
            "target",
            Some("family"),
            format!("unknown family {other:?}; expected gaussian, student_t or product_iid"),
        )),
    }
}

fn target_scale(target: &TargetModel) -> Option<&Scale> {
    match target.family() {
        Family::Gaussian { scale, .. } | Family::StudentT { scale, .. } => Some(scale),
        Family::ProductIid { .. } => None,
    }
}

pub fn build_projection(
    section: &ProjectionSection,
    target: &TargetModel,
    multiplier: f64,
) -> IssueResult<ProjectionConfig> {
    let d = target.dim();
    if !(multiplier > 0.0) || !multiplier.is_finite() {
        return Err(Issue::new("projection", Some("radius_multiplier"), "must be positive"));
    }
    let radius = match &section.radius {
        None => (d as f64).sqrt(),
        Some(RadiusSpec::Value(r)) => *r,
        Some(RadiusSpec::Named(n)) if n == "sqrt_d" => (d as f64).sqrt(),
        Some(RadiusSpec::Named(n)) if n == "trace" => match target_scale(target) {
            Some(s) => s.lambda().iter().sum::<f64>().sqrt(),
            None => (d as f64).sqrt(),
        },
        Some(RadiusSpec::Named(n)) => {
            return Err(Issue::new(
                "projection",
                Some("radius"),
                format!("unknown radius {n:?}; expected sqrt_d, trace or a number"),
            ))
        }
    } * multiplier;
    let err = |e: stereo_mcmc::Error| Issue::new("projection", Some("radius"), e.to_string());
    match section.mode.as_deref() {
        None | Some("standard") => ProjectionConfig::standard(d, radius).map_err(err),
        Some("generalized") => {
            let scale = target_scale(target).ok_or_else(|| {
                Issue::new(
                    "projection",
                    Some("mode"),
                    "generalized projection needs a gaussian or student_t target",
                )
            })?;
            ProjectionConfig::generalized(radius, scale.lambda().to_vec(), scale.rotation_matrix()).map_err(err)
        }
        Some(other) => Err(Issue::new(
            "projection",
            Some("mode"),
            format!("unknown mode {other:?}; expected standard or generalized"),
        )),
    }
}

fn chain_kind(kind: &str) -> Option<ChainKind> {
    match kind {
        "sps" => Some(ChainKind::Sps),
        "gsps" => Some(ChainKind::Gsps),
        "rsps" => Some(ChainKind::Rsps),
        "rwm" => Some(ChainKind::Rwm),
        _ => None,
    }
}

fn build_init(i: usize, spec: Option<&InitSpec>, d: usize, default: Init) -> IssueResult<Init> {
    Ok(match spec {
        None => default,
        Some(InitSpec::Named(n)) => match n.as_str() {
            "north_pole" => Init::NorthPole,
            "south_pole" => Init::SouthPole,
            "uniform" => Init::UniformSphere,
            "stationary" => Init::Stationary,
            other => {
                return Err(Issue::sampler(
                    i,
                    Some("init"),
                    format!("unknown init {other:?}; expected north_pole, south_pole, uniform or stationary"),
                ))
            }
        },
        Some(InitSpec::Constant { constant }) => Init::Point(vec![*constant; d]),
        Some(InitSpec::Point { point }) => {
            if point.len() != d {
                return Err(Issue::sampler(
                    i,
                    Some("init"),
                    format!("init point has {} entries, dim is {d}", point.len()),
                ));
            }
            Init::Point(point.clone())
        }
    })
}

/// Step size for `kind` from `h`, `ell` or `"auto_0.234"`.
fn resolve_step(i: usize, s: &SamplerSection, kind: ChainKind, target: &TargetModel) -> IssueResult<f64> {
    let d = target.dim();
    let theory = |e: stereo_mcmc::Error| Issue::sampler(i, Some("ell"), e.to_string());
    let h = match (&s.h, s.ell) {
        (Some(_), Some(_)) => return Err(Issue::sampler(i, Some("ell"), "give either h or ell, not both")),
        (None, None) => return Err(Issue::sampler(i, Some("kind"), "missing step size: set h or ell")),
        (None, Some(ell)) => match kind {
            ChainKind::Rwm => ell / (d as f64).sqrt(),
            _ => h_from_ell(ell, d).map_err(theory)?,
        },
        (Some(StepSpec::Value(h)), None) => *h,
        (Some(StepSpec::Named(n)), None) if n == "auto_0.234" => {
            let e = target.roughness().ok_or_else(|| {
                Issue::sampler(
                    i,
                    Some("h"),
                    "auto_0.234 needs a product_iid or standard gaussian target with known roughness",
                )
            })?;
            match kind {
                ChainKind::Rwm => 2.38 / (d as f64 * e).sqrt(),
                _ if e > 1.0 => {
                    optimal_tuning(e, d)
                        .map_err(|e| Issue::sampler(i, Some("h"), e.to_string()))?
                        .h
                }
                _ => LARGE_STEP_H,
            }
        }
        (Some(StepSpec::Named(n)), None) => {
            return Err(Issue::sampler(
                i,
                Some("h"),
                format!("unknown step {n:?}; expected a number or auto_0.234"),
            ))
        }
    };
    if !(h > 0.0) || !h.is_finite() {
        return Err(Issue::sampler(i, Some("h"), format!("step must be positive, got {h}")));
    }
    Ok(h)
}

fn build_clock(i: usize, c: Option<&ClockSection>) -> IssueResult<ClockSettings> {
    let mut out = ClockSettings::default();
    let Some(c) = c else { return Ok(out) };
    match c.method.as_deref() {
        None | Some("inversion") => out.method = ClockMethod::Inversion,
        Some("thinning") => out.method = ClockMethod::Thinning,
        Some(other) => {
            return Err(Issue::sampler(
                i,
                Some("clock"),
                format!("unknown clock method {other:?}; expected inversion or thinning"),
            ))
        }
    }
    out.grid = c.grid.unwrap_or(out.grid);
    out.tolerance = c.tolerance.unwrap_or(out.tolerance);
    out.safety = c.safety.unwrap_or(out.safety);
    out.validate()
        .map_err(|e| Issue::sampler(i, Some("clock"), e.to_string()))?;
    Ok(out)
}

fn horizon(i: usize, s: &SamplerSection) -> IssueResult<Horizon> {
    match (s.total_time, s.n_events) {
        (Some(_), Some(_)) => Err(Issue::sampler(
            i,
            Some("n_events"),
            "give either total_time or n_events, not both",
        )),
        (Some(t), None) => Ok(Horizon::TotalTime(t)),
        (None, Some(n)) => Ok(Horizon::EventCount(n)),
        (None, None) => Ok(Horizon::EventCount(1000)),
    }
}

pub fn build_sampler(i: usize, s: &SamplerSection, r: &Resolved) -> IssueResult<SamplerPlan> {
    let d = r.target.dim();
    if chain_kind(&s.kind).is_none() && s.kind != "sbps" && s.kind != "bps" {
        return Err(Issue::sampler(
            i,
            Some("kind"),
            format!(
                "unknown sampler {:?}; expected sps, gsps, rsps, rwm, sbps or bps",
                s.kind
            ),
        ));
    }
    let plan = if let Some(kind) = chain_kind(&s.kind) {
        if s.total_time.is_some() || s.n_events.is_some() || s.refresh_rate.is_some() || s.clock.is_some() {
            return Err(Issue::sampler(
                i,
                Some("kind"),
                format!("{} takes n_steps, not event settings", s.kind),
            ));
        }
        let h = resolve_step(i, s, kind, &r.target)?;
        let init = build_init(i, s.init.as_ref(), d, Init::Stationary)?;
        let config = RwmConfig::new(r.target.clone(), h, s.n_steps.unwrap_or(10_000), init, 0)
            .with_projection(r.projection.clone());
        config
            .validate(kind)
            .map_err(|e| Issue::sampler(i, Some("kind"), e.to_string()))?;
        SamplerPlan::Chain { kind, config }
    } else {
        if s.h.is_some() || s.ell.is_some() || s.n_steps.is_some() {
            return Err(Issue::sampler(
                i,
                Some("kind"),
                format!("{} takes total_time or n_events, not h/n_steps", s.kind),
            ));
        }
        let refresh = s.refresh_rate.unwrap_or(1.0);
        let clock = build_clock(i, s.clock.as_ref())?;
        let horizon = horizon(i, s)?;
        match s.kind.as_str() {
            "sbps" => {
                let mut c = SbpsConfig::new(r.target.clone(), refresh, horizon, 0);
                c.projection = r.projection.clone();
                c.init = build_init(i, s.init.as_ref(), d, Init::UniformSphere)?;
                c.clock = clock;
                c.validate()
                    .map_err(|e| Issue::sampler(i, Some("kind"), e.to_string()))?;
                SamplerPlan::Sbps(c)
            }
            "bps" => {
                let mut c = BpsConfig::new(r.target.clone(), refresh, horizon, 0);
                c.init = match build_init(i, s.init.as_ref(), d, Init::Stationary)? {
                    Init::Stationary => None,
                    Init::Point(x) => Some(x),
                    _ => {
                        return Err(Issue::sampler(
                            i,
                            Some("init"),
                            "bps starts from stationary or an explicit point",
                        ))
                    }
                };
                c.clock = clock;
                SamplerPlan::Bps(c)
            }
            _ => unreachable!("sampler kind checked above"),
        }
    };
    Ok(plan)
}

/// Log-spaced grid from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![min],
        n => (0..n)
            .map(|i| (min.ln() + (max.ln() - min.ln()) * i as f64 / (n - 1) as f64).exp())
            .collect(),
    }
}

/// `h` whose predicted stationary acceptance at `R = sqrt(lambda d)` is
/// `accept`, found by bisection on `ell`.
pub fn h_for_acceptance(accept: f64, roughness: f64, lambda: f64, d: usize) -> stereo_mcmc::Result<f64> {
    let predicted = |ell: f64| -> stereo_mcmc::Result<f64> {
        let (mu, var) = clt_mean_var(ell, lambda, roughness)?;
        Ok(expected_accept(mu, var.sqrt()))
    };
    let (mut lo, mut hi) = (1e-9, (2.0 * d as f64).sqrt() * (1.0 - 1e-12));
    if !(accept > predicted(hi)? && accept < predicted(lo)?) {
        return Err(stereo_mcmc::Error::Domain(format!(
            "acceptance {accept} is not reachable at d = {d}, E = {roughness}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if predicted(mid)? > accept {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    h_from_ell(0.5 * (lo + hi), d)
}
