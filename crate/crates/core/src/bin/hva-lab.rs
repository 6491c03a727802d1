use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hva_lab::cli::{run, Command, RunArgs};

#[derive(Parser)]
#[command(name = "hva-lab", version, about = "Gradient-scaling experiments for Hamiltonian variational ansatzes")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Mean squared gradient per size, depth and initialization scheme.
    GradScan(Common),
    /// Mean squared gradient over a grid of uniform ranges [0, eps].
    EpsScan(Common),
    /// VQE learning curves for the Heisenberg ring, exact or shot-based.
    Vqe(Common),
    /// Long-time gradient bound over random translation-invariant Hamiltonians.
    FhScan(Common),
    /// Closed-form bounds with dense checks where available.
    Bounds(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paper_scale: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, c) = match cli.command {
        Sub::GradScan(c) => (Command::GradScan, c),
        Sub::EpsScan(c) => (Command::EpsScan, c),
        Sub::Vqe(c) => (Command::Vqe, c),
        Sub::FhScan(c) => (Command::FhScan, c),
        Sub::Bounds(c) => (Command::Bounds, c),
    };
    let args = RunArgs { command, config: c.config, out: c.out, seed: c.seed, paper_scale: c.paper_scale };
    match run(&args) {
        Ok(n) => {
            eprintln!("wrote {n} rows to {}", args.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hva-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
