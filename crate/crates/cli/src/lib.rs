//! Command-line driver: configuration loading, subcommand dispatch and
//! single-line error reporting.
//!
//! All randomness derives from the configured master seed; parallel work
//! is collected in canonical order, so identical inputs give identical files.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use drc_core::{Error, Result};

use commands::{cmd_cool, cmd_fit, cmd_resonances, cmd_spectrum, cmd_thermometry, CommandOutput, SpectrumMode};
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "drc-sim", version, about = "Degenerate Raman cooling simulations and sideband thermometry")]
pub struct Cli {
    /// TOML run configuration; defaults are used for missing keys.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master RNG seed (overrides the configuration).
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory (overrides the configuration).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "DRC_SIM_WORKERS", value_name = "N")]
    pub workers: Option<usize>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    pub print_config: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Survival and occupation versus offset field.
    Resonances,
    /// Cooling trajectory along one axis.
    Cool,
    /// Model spectrum (`synth`) or simulated measurement (`pipeline`).
    Spectrum {
        /// synth | pipeline
        mode: String,
    },
    /// Fit the spectrum model to a PSD file.
    Fit {
        /// PSD file; defaults to psd.csv in the output directory.
        #[arg(long, value_name = "PATH")]
        psd: Option<PathBuf>,
    },
    /// Occupations from integrated sideband bands.
    Thermometry {
        /// PSD file; defaults to psd.csv in the output directory.
        #[arg(long, value_name = "PATH")]
        psd: Option<PathBuf>,
    },
}

/// Configuration after applying the command-line overrides.
pub fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_toml(&output::read_text(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

/// What a successful invocation produced.
#[derive(Debug)]
pub enum Outcome {
    Config(String),
    Ran(CommandOutput),
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::InvalidConfig("--workers must be at least 1".into()));
        }
        // Fails only if the pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = effective_config(cli)?;
    if cli.print_config {
        return Ok(Outcome::Config(cfg.to_toml()));
    }
    let psd_path = |p: &Option<PathBuf>| p.clone().unwrap_or_else(|| cfg.out_dir.join("psd.csv"));
    let out = match &cli.command {
        None => return Err(Error::InvalidConfig("no subcommand given".into())),
        Some(Command::Resonances) => cmd_resonances(&cfg)?,
        Some(Command::Cool) => cmd_cool(&cfg)?,
        Some(Command::Spectrum { mode }) => cmd_spectrum(&cfg, mode.parse::<SpectrumMode>()?)?,
        Some(Command::Fit { psd }) => cmd_fit(&cfg, &psd_path(psd))?,
        Some(Command::Thermometry { psd }) => cmd_thermometry(&cfg, &psd_path(psd))?,
    };
    Ok(Outcome::Ran(out))
}

/// The single-line, machine-parsable error report.
pub fn error_line(kind: &str, msg: &str) -> String {
    let flat: String = msg.split_whitespace().collect::<Vec<_>>().join(" ");
    format!("error: kind={kind} msg={flat}")
}
