//! `hubbard-ts`: batch driver for time-series simulation of the Fermi-Hubbard
//! model.

mod commands;
mod config;
#[cfg(test)]
mod e2e;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Ctx;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::OutDir;

#[derive(Parser, Debug)]
#[command(name = "hubbard-ts", version, about = "Time-series simulation of the Fermi-Hubbard model")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Loschmidt readouts on the filter time grid.
    Timeseries,
    /// Filtered density of states over the energy grid.
    Fdos,
    /// Markov-chain sampling of the double occupancy.
    Sample,
    /// Gate budgets and shot overheads.
    Resources,
    /// Re-process the noisy rows of a timeseries file.
    Mitigate {
        #[arg(long)]
        input: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().map_err(|e| CliError::Io(e.to_string()))?;
    let out = OutDir::create(&cli.out, cfg.hash())?;
    let ctx = Ctx { cfg, out };
    pool.install(|| match &cli.command {
        Command::Timeseries => commands::timeseries::run(&ctx),
        Command::Fdos => commands::fdos::run(&ctx),
        Command::Sample => commands::sample::run(&ctx),
        Command::Resources => commands::resources::run(&ctx),
        Command::Mitigate { input } => commands::mitigate::run(&ctx, input),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hubbard-ts: {e}");
            e.exit_code()
        }
    }
}
