use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wallflow_cli::{
    cmd_modes, cmd_quasi_stability, cmd_simulate, cmd_stability_check, cmd_stationary, cmd_sweep, load_config, Failure,
    SweepSpec,
};

#[derive(Parser)]
#[command(name = "wallflow", version, about = "Channel flow over an elastic wall plate: Galerkin simulations and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for parallel commands (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Seed for random initial data and stationary guesses.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory.
    Simulate(Common),
    /// Dump plate eigenvalues and sampled mode shapes.
    Modes(Common),
    /// Stationary states and the branch table.
    Stationary {
        #[command(flatten)]
        common: Common,
        /// Parameter levels in the branch table.
        #[arg(long, default_value_t = 8)]
        levels: usize,
    },
    /// Evaluate the stability margin without simulating.
    StabilityCheck(Common),
    /// Run a trajectory pair and search for quasi-stability constants.
    QuasiStability {
        #[command(flatten)]
        common: Common,
        /// Initial distance of the pair in the energy norm.
        #[arg(long, default_value_t = 1e-3)]
        z0: f64,
        /// Largest admissible M_R.
        #[arg(long, default_value_t = 1e6)]
        cap: f64,
    },
    /// Sweep the cartesian product of k, nu and sigma.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        k: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        nu: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        sigma: Vec<f64>,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate(c) => cmd_simulate(&load_config(&c.config)?, &c.out, c.seed),
        Command::Modes(c) => cmd_modes(&load_config(&c.config)?, &c.out),
        Command::Stationary { common: c, levels } => cmd_stationary(&load_config(&c.config)?, &c.out, c.seed, levels),
        Command::StabilityCheck(c) => {
            let r = cmd_stability_check(&load_config(&c.config)?, &c.out)?;
            println!("margin = {} satisfied = {} branch = {}", r.margin, r.satisfied, r.which_branch.label());
            Ok(())
        }
        Command::QuasiStability { common: c, z0, cap } => {
            cmd_quasi_stability(&load_config(&c.config)?, &c.out, c.seed, z0, cap)
        }
        Command::Sweep { common: c, k, nu, sigma } => {
            cmd_sweep(&load_config(&c.config)?, &SweepSpec { k, nu, sigma }, &c.out, c.seed, c.threads).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("wallflow: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
