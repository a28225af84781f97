//! flagflow: Morse decompositions and normal-hyperbolicity certificates for
//! translation flows on real flag manifolds.
//!
//! Exit codes: 0 success, 2 input or numerical precondition failure,
//! 3 verification failure.

mod commands;
mod config;
mod portrait;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use commands::VerificationFailure;
use config::ProblemConfig;
use report::OutputDir;

#[derive(Parser)]
#[command(
    name = "flagflow",
    about = "Morse decompositions of translation flows on flag manifolds",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file.
    config: PathBuf,
    /// Output directory for the CSV table and JSON summary.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the eigenvalue clustering tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Jordan decomposition, chamber data and the decay constant mu.
    Decompose(CommonArgs),
    /// Table of minimal Morse components with dimensions and Conley shifts.
    Components(CommonArgs),
    /// Decay-exponent verification on every nonempty normal bundle.
    Decay(CommonArgs),
    /// Phase-portrait data (trajectories, component loci, recurrent points).
    Portrait(CommonArgs),
    /// Monodromy analysis of a periodic coefficient map.
    Periodic(CommonArgs),
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Decompose(a)
            | Command::Components(a)
            | Command::Decay(a)
            | Command::Portrait(a)
            | Command::Periodic(a) => a,
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let args = cli.command.args();
    let mut config = ProblemConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = Some(seed);
    }
    if let Some(tol) = args.tol {
        config.tolerances.eps_cluster = Some(tol);
    }
    let out = OutputDir::new(&args.out)?;
    match &cli.command {
        Command::Decompose(_) => commands::cmd_decompose(&config, &out),
        Command::Components(_) => commands::cmd_components(&config, &out),
        Command::Decay(_) => commands::cmd_decay(&config, &out),
        Command::Portrait(_) => commands::cmd_portrait(&config, &out),
        Command::Periodic(_) => commands::cmd_periodic(&config, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("flagflow: {err:#}");
            if err.downcast_ref::<VerificationFailure>().is_some() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
