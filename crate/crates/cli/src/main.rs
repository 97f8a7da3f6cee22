//! Experiment driver for the causal attention token dynamics laboratory.
//!
//! Subcommands mirror the experiment kinds in the config file; the
//! subcommand and the config's `experiment` field must agree. Exit codes:
//! 0 success, 1 verification criterion failed, 2 configuration error,
//! 3 runtime error.

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use commands::Tier;
use config::{Experiment, ExperimentConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "litm",
    about = "Causal attention token dynamics: simulation, limit solvers, retrieval profiles, verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// experiment configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// worker threads for replicate and grid sweeps (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// override the config's output_dir
    #[arg(long)]
    output: Option<PathBuf>,
    /// override the config's seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TierArg {
    Fast,
    Mc,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// integrate particle ensembles and dump trajectories
    Simulate(Common),
    /// evolve the limiting spectral field
    Meanfield(Common),
    /// Monte Carlo modes, covariances, and cumulants
    Correlations(Common),
    /// closed-form retrieval score profiles
    Profile(Common),
    /// hard and soft retrieval accuracy
    Accuracy(Common),
    /// run the verification criteria
    Verify {
        #[command(flatten)]
        common: Common,
        /// fast: deterministic checks; mc: ensemble checks
        #[arg(long, value_enum, default_value = "all")]
        tier: TierArg,
    },
}

impl Command {
    fn expected(&self) -> Experiment {
        match self {
            Command::Simulate(_) => Experiment::Simulate,
            Command::Meanfield(_) => Experiment::Meanfield,
            Command::Correlations(_) => Experiment::Correlations,
            Command::Profile(_) => Experiment::Profile,
            Command::Accuracy(_) => Experiment::Accuracy,
            Command::Verify { .. } => Experiment::Verify,
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Simulate(c)
            | Command::Meanfield(c)
            | Command::Correlations(c)
            | Command::Profile(c)
            | Command::Accuracy(c) => c,
            Command::Verify { common, .. } => common,
        }
    }

    fn tier(&self) -> Tier {
        match self {
            Command::Verify { tier, .. } => match tier {
                TierArg::Fast => Tier::Fast,
                TierArg::Mc => Tier::Mc,
                TierArg::All => Tier::All,
            },
            _ => Tier::All,
        }
    }
}

fn run() -> u8 {
    let cli = Cli::parse();
    let common = cli.command.common();

    let text = match std::fs::read_to_string(&common.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: cannot read {}: {e}", common.config.display());
            return 2;
        }
    };
    let mut cfg = match ExperimentConfig::from_toml(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    if cfg.experiment != cli.command.expected() {
        eprintln!(
            "config error: config declares experiment \"{}\" but the subcommand is \"{}\"",
            cfg.experiment.label(),
            cli.command.expected().label()
        );
        return 2;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.output {
        cfg.output_dir = out.display().to_string();
    }
    if let Some(k) = common.threads {
        // a later duplicate initialization (e.g. in tests) is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }

    let out_dir = PathBuf::from(&cfg.output_dir);
    match commands::dispatch(&cfg, &out_dir, cli.command.tier()) {
        Ok(code) => code as u8,
        Err(e) => {
            eprintln!("{e}");
            3
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run())
}
