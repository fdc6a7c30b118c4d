//! Versioned CSV output.
//!
//! Every file starts with a comment line
//! `# stereo-mcmc <schema> v<version> key=value ...` carrying the seed and
//! stream id, followed by an ordinary CSV header. Floats are written with 17
//! significant digits so they round-trip exactly.

use std::io::{BufRead, BufReader, Read, Write};

use crate::diagnostics::DiagnosticsReport;
use crate::error::{Error, Result};
use crate::sbps::{EuclideanState, EventPath, PhaseState};
use crate::sps::Trace;
use crate::theory::TuningReport;

pub const SCHEMA_VERSION: u32 = 1;
const PREFIX: &str = "# stereo-mcmc";

pub mod schema {
    pub const TRACE: &str = "trace";
    pub const EVENTS: &str = "events";
    pub const DIAGNOSTICS: &str = "diagnostics";
    pub const ACF: &str = "acf";
    pub const TUNING: &str = "tuning";
    pub const EFFICIENCY: &str = "efficiency";
    pub const ESS_CURVE: &str = "ess_curve";
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// A single CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    U(u64),
    B(bool),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => fmt_f64(*v),
            Cell::I(v) => v.to_string(),
            Cell::U(v) => v.to_string(),
            Cell::B(v) => u8::from(*v).to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::U(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

/// Writes one versioned table.
pub struct TableWriter<W: Write> {
    inner: csv::Writer<W>,
    width: usize,
}

impl<W: Write> TableWriter<W> {
    pub fn new(mut w: W, schema: &str, meta: &[(&str, String)], headers: &[String]) -> Result<Self> {
        let mut line = format!("{PREFIX} {schema} v{SCHEMA_VERSION}");
        for (k, v) in meta {
            line.push_str(&format!(" {k}={}", v.replace(char::is_whitespace, "_")));
        }
        writeln!(w, "{line}")?;
        let mut inner = csv::Writer::from_writer(w);
        inner.write_record(headers)?;
        Ok(Self {
            inner,
            width: headers.len(),
        })
    }

    pub fn row(&mut self, cells: &[Cell]) -> Result<()> {
        if cells.len() != self.width {
            return Err(Error::Csv(format!(
                "row has {} fields, header has {}",
                cells.len(),
                self.width
            )));
        }
        self.inner.write_record(cells.iter().map(Cell::render))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| Error::Csv(e.to_string()))
    }
}

/// Coordinates stored per trace row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceColumns {
    #[default]
    All,
    /// `x_1` and `norm_sq` only.
    Compressed,
}

fn trace_meta(trace: &Trace) -> Vec<(&'static str, String)> {
    let m = &trace.meta;
    vec![
        ("sampler", m.sampler.clone()),
        ("target", m.target.clone()),
        ("dim", m.dim.to_string()),
        ("seed", m.seed.to_string()),
        ("stream", m.stream.to_string()),
        ("h", m.h.map_or("none".into(), fmt_f64)),
        ("radius", fmt_f64(m.radius)),
    ]
}

/// Trace rows: `step, x_1..x_d | x_1,norm_sq, latitude, accepted, log_ratio`
/// plus `source_time` for discretized paths. Row 0 is the initial state with
/// `accepted = 1` and `log_ratio = 0`.
pub fn write_trace<W: Write>(w: W, trace: &Trace, columns: TraceColumns) -> Result<W> {
    let d = trace.dim();
    let mut headers = vec!["step".to_string()];
    match columns {
        TraceColumns::All => headers.extend((1..=d).map(|i| format!("x_{i}"))),
        TraceColumns::Compressed => headers.extend(["x_1".into(), "norm_sq".into()]),
    }
    headers.extend(["latitude".into(), "accepted".into(), "log_ratio".into()]);
    if trace.times.is_some() {
        headers.push("source_time".into());
    }
    let mut tw = TableWriter::new(w, schema::TRACE, &trace_meta(trace), &headers)?;
    if trace.n_steps() == 0 && trace.times.is_none() {
        // header only for an empty run
        return tw.finish();
    }
    for (k, x) in trace.states.iter().enumerate() {
        let mut row: Vec<Cell> = vec![k.into()];
        match columns {
            TraceColumns::All => row.extend(x.iter().map(|v| Cell::F(*v))),
            TraceColumns::Compressed => {
                row.push(x[0].into());
                row.push(x.iter().map(|v| v * v).sum::<f64>().into());
            }
        }
        let (acc, lr) = if k == 0 {
            (true, 0.0)
        } else {
            (trace.accepted[k - 1], trace.log_ratios[k - 1])
        };
        row.extend([trace.latitudes[k].into(), acc.into(), lr.into()]);
        if let Some(t) = &trace.times {
            row.push(t[k].into());
        }
        tw.row(&row)?;
    }
    tw.finish()
}

/// Coordinates stored per event row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EventColumns {
    #[default]
    All,
    /// Latitude and the first two coordinates.
    Compressed,
}

/// Event states that can be written as rows.
pub trait EventRecord {
    /// Column prefix, `z` on the sphere and `x` in R^d.
    const PREFIX: &'static str;
    fn coords(&self) -> &[f64];
}

impl EventRecord for PhaseState {
    const PREFIX: &'static str = "z";
    fn coords(&self) -> &[f64] {
        self.z.coords()
    }
}

impl EventRecord for EuclideanState {
    const PREFIX: &'static str = "x";
    fn coords(&self) -> &[f64] {
        &self.x
    }
}

/// Event rows: `t, kind, z_1..z_{d+1} | latitude,z_1,z_2, v_dot_grad`. The
/// first row is the initial state with kind `start`.
pub fn write_events<W: Write, S: EventRecord + crate::sbps::PathState>(
    w: W,
    path: &EventPath<S>,
    columns: EventColumns,
) -> Result<W> {
    let n = path.initial.coords().len();
    let mut headers = vec!["t".to_string(), "kind".to_string()];
    match columns {
        EventColumns::All => headers.extend((1..=n).map(|i| format!("{}_{i}", S::PREFIX))),
        EventColumns::Compressed => {
            headers.push("latitude".into());
            headers.extend((1..=n.min(2)).map(|i| format!("{}_{i}", S::PREFIX)));
        }
    }
    headers.push("v_dot_grad".into());
    let meta = vec![
        ("sampler", path.sampler.clone()),
        ("target", path.target.clone()),
        ("dim", path.dim().to_string()),
        ("seed", path.seed.to_string()),
        ("stream", path.stream.to_string()),
        (
            "radius",
            path.projection.as_ref().map_or("none".into(), |p| fmt_f64(p.radius())),
        ),
        ("total_time", fmt_f64(path.total_time)),
    ];
    let mut tw = TableWriter::new(w, schema::EVENTS, &meta, &headers)?;
    let rows = std::iter::once((0.0, "start", &path.initial, f64::NAN))
        .chain(path.events.iter().map(|e| (e.t, e.kind.name(), &e.state, e.v_dot_grad)));
    for (t, kind, s, vg) in rows {
        let mut row: Vec<Cell> = vec![t.into(), kind.into()];
        match columns {
            EventColumns::All => row.extend(s.coords().iter().map(|v| Cell::F(*v))),
            EventColumns::Compressed => {
                row.push(s.latitude().into());
                row.extend(s.coords()[..n.min(2)].iter().map(|v| Cell::F(*v)));
            }
        }
        row.push(vg.into());
        tw.row(&row)?;
    }
    tw.finish()
}

/// One diagnostics row with the run it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRow {
    pub run: String,
    pub sampler: String,
    pub dim: usize,
    pub seed: u64,
    pub stream: u64,
    pub report: DiagnosticsReport,
}

pub const DIAGNOSTICS_HEADERS: [&str; 12] = [
    "run",
    "sampler",
    "dim",
    "seed",
    "stream",
    "observable",
    "esjd",
    "esjd_per_dim",
    "acceptance_rate",
    "ess",
    "ess_per_switch",
    "batches",
];

pub fn write_diagnostics<W: Write>(w: W, rows: &[DiagnosticsRow]) -> Result<W> {
    let headers: Vec<String> = DIAGNOSTICS_HEADERS.iter().map(|s| s.to_string()).collect();
    let meta = match rows.first() {
        Some(r) => vec![("seed", r.seed.to_string()), ("stream", r.stream.to_string())],
        None => vec![],
    };
    let mut tw = TableWriter::new(w, schema::DIAGNOSTICS, &meta, &headers)?;
    for r in rows {
        let d = &r.report;
        tw.row(&[
            r.run.as_str().into(),
            r.sampler.as_str().into(),
            r.dim.into(),
            r.seed.into(),
            r.stream.into(),
            d.observable.name().into(),
            d.esjd.into(),
            d.esjd_per_dim.into(),
            d.acceptance_rate.into(),
            d.ess.into(),
            d.ess_per_switch.into(),
            d.batch_count.into(),
        ])?;
    }
    tw.finish()
}

/// Autocorrelations in long form: `run, lag, acf`.
pub fn write_acf<W: Write>(w: W, seed: u64, stream: u64, series: &[(String, Vec<f64>)]) -> Result<W> {
    let headers = vec!["run".to_string(), "lag".to_string(), "acf".to_string()];
    let meta = [("seed", seed.to_string()), ("stream", stream.to_string())];
    let mut tw = TableWriter::new(w, schema::ACF, &meta, &headers)?;
    for (run, a) in series {
        for (lag, v) in a.iter().enumerate() {
            tw.row(&[run.as_str().into(), lag.into(), (*v).into()])?;
        }
    }
    tw.finish()
}

pub const TUNING_HEADERS: [&str; 10] = [
    "dim",
    "ell",
    "h",
    "lambda",
    "roughness",
    "predicted_acceptance",
    "predicted_esjd",
    "diffusion_speed",
    "ell_numeric",
    "esjd_max_numeric",
];

pub fn write_tuning<W: Write>(w: W, reports: &[TuningReport]) -> Result<W> {
    let headers: Vec<String> = TUNING_HEADERS.iter().map(|s| s.to_string()).collect();
    let mut tw = TableWriter::new(
        w,
        schema::TUNING,
        &[("seed", "none".into()), ("stream", "none".into())],
        &headers,
    )?;
    for r in reports {
        tw.row(&[
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
    }
    tw.finish()
}

/// A table read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: String,
    pub version: u32,
    pub meta: Vec<(String, String)>,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Csv(format!("missing column `{name}`")))
    }

    pub fn column_f64(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                row[i]
                    .parse::<f64>()
                    .map_err(|e| Error::Csv(format!("row {r}, column `{name}`: {e}")))
            })
            .collect()
    }

    pub fn column_str(&self, name: &str) -> Result<Vec<&str>> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(|row| row[i].as_str()).collect())
    }

    /// Fails unless the file carries `schema` at the current version.
    pub fn expect_schema(&self, schema: &str) -> Result<()> {
        if self.schema != schema || self.version != SCHEMA_VERSION {
            return Err(Error::Csv(format!(
                "expected schema {schema} v{SCHEMA_VERSION}, found {} v{}",
                self.schema, self.version
            )));
        }
        Ok(())
    }
}

/// Reads any table written by this module.
pub fn read_table<R: Read>(r: R) -> Result<Table> {
    let mut r = BufReader::new(r);
    let mut first = String::new();
    r.read_line(&mut first)?;
    let rest = first
        .trim_end()
        .strip_prefix(PREFIX)
        .ok_or_else(|| Error::Csv("missing schema comment line".into()))?;
    let mut parts = rest.split_whitespace();
    let schema = parts
        .next()
        .ok_or_else(|| Error::Csv("missing schema name".into()))?
        .to_string();
    let version = parts
        .next()
        .and_then(|v| v.strip_prefix('v'))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Csv("missing schema version".into()))?;
    let meta = parts
        .filter_map(|kv| kv.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect();
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.iter().map(str::to_string).collect();
    let rows = rdr
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok(Table {
        schema,
        version,
        meta,
        headers,
        rows,
    })
}
