//! `polymer`: the command-line front end of the elastic-polymer library.
//!
//! Exit codes: 0 on success, 2 on invalid arguments or configuration, 3 when
//! a solver does not converge or a stationarity check fails, 1 on i/o errors.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use commands::{CliError, Context};
use config::RunConfig;
use output::Sink;

#[derive(Parser)]
#[command(
    name = "polymer",
    version,
    about = "Parisi pairs, phase diagrams, displacements and Monte Carlo for the elastic polymer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Key-value configuration file (`key = value` per line, `#` comments).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Master seed of the simulator (overrides `sim.seed`).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads (default: all available cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Omit the timestamp line from CSV and plot-data files.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Classify the configured point as RS, 1RSB or FRSB.
    Classify,
    /// Solve for the Parisi pair and write it as JSON.
    Solve,
    /// Value of the Parisi functional at the solved pair.
    FreeEnergy,
    /// RS/RSB boundary in the (beta, mu) plane.
    PhaseDiagram,
    /// Mean-squared displacement H(x) on `grid.x`.
    Displacement,
    /// Wandering exponent and prefactor of the massless model.
    Wandering,
    /// Lattice functions against their continuum limits.
    LatticeVerify,
    /// Monte Carlo simulation of the finite model.
    Simulate,
    /// Probes of printed statements that disagree with a re-derivation.
    ErrataCheck,
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::defaults(),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("cannot configure {n} threads: {e}")))?;
    }
    let sink = Sink::new(&cli.out, !cli.no_timestamp)?;
    let ctx = Context { cfg: &cfg, sink: &sink, seed: cli.seed };
    match cli.command {
        Command::Classify => commands::classify_cmd(&ctx),
        Command::Solve => commands::solve_cmd(&ctx),
        Command::FreeEnergy => commands::free_energy_cmd(&ctx),
        Command::PhaseDiagram => commands::phase_diagram_cmd(&ctx),
        Command::Displacement => commands::displacement_cmd(&ctx),
        Command::Wandering => commands::wandering_cmd(&ctx),
        Command::LatticeVerify => commands::lattice_verify_cmd(&ctx),
        Command::Simulate => commands::simulate_cmd(&ctx),
        Command::ErrataCheck => commands::errata_check_cmd(&ctx),
    }
}

fn main() -> ExitCode {
    let help = format!("Configuration keys (key = default  # meaning):\n\n{}", config::describe());
    let matches = Cli::command().after_long_help(help).get_matches();
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("polymer: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
