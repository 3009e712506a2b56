//! Command-line front end: `blockade evolve|steady|wigner|scan --config FILE`.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_evolve, cmd_scan, cmd_steady, cmd_wigner, Outputs, TRUNCATION_LIMIT};
pub use config::{ExperimentConfig, Overrides, RunKind, ScanAxis, ScanFamily, WignerTarget};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_TRUNCATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "blockade", version, about = "Photon-blockade simulator for driven Kerr resonators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time evolution of the photon-number populations.
    Evolve(RunArgs),
    /// Steady state reached from the initial state.
    Steady(RunArgs),
    /// Wigner function on a grid.
    Wigner(RunArgs),
    /// Steady-state observables along a parameter axis.
    Scan(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Fock-space dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<String>,
    /// Preset: 1, 2, 3, 3p, 4, 5 or kl:K,L.
    #[arg(long)]
    pub model: Option<String>,
    /// Drive ratio ε/χ.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Loss ratio γ/ε on the preset's channel.
    #[arg(long = "delta-prime")]
    pub delta_prime: Option<f64>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            dim: self.dim,
            out: self.out.clone(),
            model: self.model.clone(),
            delta: self.delta,
            delta_prime: self.delta_prime,
        }
    }
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Truncation { .. } => EXIT_TRUNCATION,
        Error::Solver(_) | Error::Stiffness { .. } | Error::Capacity { .. } => EXIT_SOLVER,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn load(args: &RunArgs, kind: RunKind) -> crate::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    cfg.apply(&args.overrides())?;
    cfg.set_kind(kind)?;
    Ok(cfg)
}

/// Run a parsed command line.
pub fn run(cli: &Cli) -> crate::Result<Outputs> {
    let (args, kind) = match &cli.command {
        Command::Evolve(a) => (a, RunKind::Evolve),
        Command::Steady(a) => (a, RunKind::Steady),
        Command::Wigner(a) => (a, RunKind::Wigner),
        Command::Scan(a) => (a, RunKind::Scan),
    };
    // Configuration problems are reported before any computation starts.
    let cfg = load(args, kind)?;
    match kind {
        RunKind::Evolve => cmd_evolve(&cfg),
        RunKind::Steady => cmd_steady(&cfg),
        RunKind::Wigner => cmd_wigner(&cfg),
        RunKind::Scan => cmd_scan(&cfg),
    }
}

/// Parse `std::env::args`, run, report, and return the exit status.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            println!("{}", out.data.display());
            println!("{}", out.meta.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
