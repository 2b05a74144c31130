use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qniff_cli::{init_threads, run, Command};

#[derive(Parser)]
#[command(name = "qniff", version, about = "Infer and filter readout and gate noise on synthetic circuit data")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Run directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Sub {
    /// Draw shot ensembles for the main, test and calibration circuits.
    Simulate(Common),
    /// Infer noise parameters from the simulated data.
    Infer(Common),
    /// Apply the configured filter to every ensemble and time slot.
    Filter(Common),
    /// Collect posteriors and filter results into report tables.
    Report(Common),
    /// Sweep one parameter through the forward model.
    Sensitivity(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Sub::Simulate(a) => (Command::Simulate, a),
        Sub::Infer(a) => (Command::Infer, a),
        Sub::Filter(a) => (Command::Filter, a),
        Sub::Report(a) => (Command::Report, a),
        Sub::Sensitivity(a) => (Command::Sensitivity, a),
    };
    let result = init_threads().and_then(|_| run(cmd, &args.config, &args.out, args.seed));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qniff: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
