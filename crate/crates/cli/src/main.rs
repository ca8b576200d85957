// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use nondini::profile::Mode;

use crate::config::RunConfig;
use crate::verify::Suite;

#[derive(Debug, Parser)]
#[command(
    name = "nondini",
    version,
    about = "Conformal map construction and harmonic-measure checks"
)]
struct Cli {
    /// TOML run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Lipschitz,
    C1,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the profile and trace the boundary: profile.json, boundary.csv.
    Construct,
    /// Run a verification suite and write report.json.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
    },
    /// Surface-ball ratio curves: density.csv, density_summary.json.
    Density {
        /// Comma-separated centers; defaults to x_1..x_8, -1 and 3.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        centers: Option<Vec<f64>>,
        #[arg(long, default_value_t = 2f64.powi(-20))]
        r_min: f64,
        #[arg(long, default_value_t = 2f64.powi(-8))]
        r_max: f64,
    },
    /// Walk-on-spheres hit frequencies against the conformal pullback: mc.json.
    McOracle {
        /// Preimage of the start point, as x,t with t > 0.
        #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.0, 1.0], allow_negative_numbers = true)]
        z0: Vec<f64>,
        /// Arc endpoints in boundary parameter, consecutive pairs.
        #[arg(long, value_delimiter = ',', default_values_t = [-1.0, 0.0, 0.0, 1.0], allow_negative_numbers = true)]
        arcs: Vec<f64>,
    },
    /// Product-integral bound check: appendix.json.
    AppendixCheck {
        /// Exponents b_k, comma-separated.
        #[arg(long, value_delimiter = ',', default_values_t = [0.125, 0.125])]
        b: Vec<f64>,
    },
}

fn run(cli: Cli) -> Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = cli.out {
        cfg.output = o;
    }
    if let Some(s) = cli.seed {
        cfg.mc.seed = s;
    }
    if let Some(m) = cli.mode {
        cfg.mode = match m {
            ModeArg::Lipschitz => Mode::Lipschitz,
            ModeArg::C1 => Mode::C1,
        };
    }
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output)?;
    match cli.command {
        Command::Construct => commands::construct(&cfg).map(|_| true),
        Command::Verify { suite } => verify::run(&cfg, suite),
        Command::Density { centers, r_min, r_max } => commands::density(&cfg, centers, r_min, r_max).map(|_| true),
        Command::McOracle { z0, arcs } => commands::mc_oracle(&cfg, &z0, &arcs),
        Command::AppendixCheck { b } => commands::appendix_check(&cfg, &b),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
