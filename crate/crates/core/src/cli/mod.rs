//! The `sjfa` command line: `fluid`, `simulate` and `compare` runs driven by
//! a TOML configuration. Every run writes a `manifest.toml` holding the fully
//! resolved configuration; running from it reproduces the same files.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

pub use commands::{cmd_compare, cmd_fluid, cmd_simulate, fluid_solution};
pub use config::{Resolved, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "sjfa",
    version,
    about = "SJF-with-aging queues: fluid solutions and simulations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the fluid model on the configured grid.
    Fluid(RunArgs),
    /// Simulate one scaled system.
    Simulate(RunArgs),
    /// Measure simulation-to-fluid distances over N and replications.
    Compare(RunArgs),
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for replications and grid columns.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Loads, overrides and resolves a configuration file.
pub fn load(path: &Path, seed: Option<u64>) -> anyhow::Result<Resolved> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let base = if base.as_os_str().is_empty() {
        Path::new(".")
    } else {
        base
    };
    cfg.resolve(base)
        .with_context(|| format!("in {}", path.display()))
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let (Command::Fluid(args) | Command::Simulate(args) | Command::Compare(args)) = &cli.command;
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("--threads")?;
    }
    let resolved = load(&args.config, args.seed)?;
    let written = match &cli.command {
        Command::Fluid(_) => cmd_fluid(&resolved, &args.out)?,
        Command::Simulate(_) => cmd_simulate(&resolved, &args.out)?,
        Command::Compare(_) => {
            let (table, files) = cmd_compare(&resolved, &args.out)?;
            println!("N\tmean_sup_levy_xi\tmax_sup_levy_xi\tmean_sup_levy_beta\tmax_iota_gap");
            for s in table.summary() {
                println!(
                    "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
                    s.n, s.mean_xi, s.max_xi, s.mean_beta, s.max_iota_gap
                );
            }
            files
        }
    };
    for f in written {
        println!("wrote {}", f.display());
    }
    Ok(())
}

pub fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
