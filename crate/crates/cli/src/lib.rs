//! Command-line experiment runner for `stereo-mcmc`.
//!
//! Subcommands read an [`config::ExperimentConfig`] from `--config` or a named
//! `--preset` and write versioned CSV files, a config snapshot and a summary
//! into the output directory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod presets;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{ExperimentConfig, LoadedConfig};
pub use error::{CliError, Result};

/// Environment variable overriding the output directory.
pub const OUT_ENV: &str = "STEREO_MCMC_OUT";

#[derive(Debug, Parser)]
#[command(name = "stereo-mcmc", version, about = "Stereographic projection MCMC experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every sampler in the config and write traces and diagnostics.
    Run(Common),
    /// ESJD efficiency curve over a step-size grid.
    SweepEsjd(Common),
    /// ESS per switch of SBPS and BPS over a refresh-rate grid.
    EssCurve(Common),
    /// Optimal-tuning table for a list of student-t marginals.
    Tuning(Common),
    /// List the built-in presets.
    Presets,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment config (TOML).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in preset name (see `stereo-mcmc presets`).
    #[arg(long)]
    pub preset: Option<String>,
    /// Output directory; overrides the config's `[output] dir`.
    #[arg(long, env = OUT_ENV)]
    pub out: Option<PathBuf>,
    /// Seed; overrides the config's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for parallel runs and sweep points.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Common {
    /// Loads the config and applies the command-line overrides. Returns it
    /// with the output directory to use.
    pub fn load(&self) -> Result<(LoadedConfig, PathBuf)> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(p), _) => LoadedConfig::from_file(p)?,
            (None, Some(name)) => LoadedConfig::from_preset(name)?,
            (None, None) => unreachable!("clap requires one of --config or --preset"),
        };
        if let Some(seed) = self.seed {
            cfg.config.seed = seed;
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.config.output.dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        cfg.config.output.dir = Some(out.display().to_string());
        Ok((cfg, out))
    }
}

/// Runs a parsed command line and returns the text to print.
pub fn run(cli: Cli) -> Result<String> {
    type Handler = fn(&LoadedConfig, &std::path::Path) -> Result<String>;
    let (common, f): (&Common, Handler) = match &cli.command {
        Command::Presets => return Ok(presets::NAMES.join("\n") + "\n"),
        Command::Run(c) => (c, commands::cmd_run),
        Command::SweepEsjd(c) => (c, commands::cmd_sweep_esjd),
        Command::EssCurve(c) => (c, commands::cmd_ess_curve),
        Command::Tuning(c) => (c, commands::cmd_tuning),
    };
    let (cfg, out) = common.load()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::ThreadPool(e.to_string()))?;
    pool.install(|| f(&cfg, &out))
}
