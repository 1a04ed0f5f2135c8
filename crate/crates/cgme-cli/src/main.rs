use std::path::PathBuf;
use std::process::ExitCode;

use cgme_cli::commands::{self, Output};
use cgme_cli::{CliError, ExperimentConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cgme", version, about = "Open-system master equations: Redfield, Davies, CGME")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides outputs.directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Bath timescales, KMS check, spectral peak and γ(ω) table.
    BathInfo,
    /// Trajectories and eigenbasis populations per equation and sweep point.
    Evolve,
    /// Trace distances to the first equation and time averages.
    Compare,
    /// Dynamical-decoupling suppression factor ξ(Δt).
    Dd,
    /// Error bounds against the measured CGME–ORE distance.
    Bounds,
    /// Theory, adjusted and numerically optimal coarse-graining times.
    OptimizeTa,
}

fn run(cli: &Cli) -> Result<String, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let cfg = ExperimentConfig::load(path)?;
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.outputs.directory.as_ref().map(|d| cfg.resolve(d)))
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut out = Output::new(&dir, cfg.outputs.gnuplot)?;
    let (name, report) = match cli.command {
        Command::BathInfo => ("bath_info", commands::bath_info(&cfg, &mut out)?),
        Command::Evolve => return commands::evolve(&cfg, &mut out),
        Command::Compare => return commands::compare(&cfg, &mut out).map(|(r, _)| r),
        Command::Dd => return commands::dd(&cfg, &mut out),
        Command::Bounds => return commands::bounds(&cfg, &mut out),
        Command::OptimizeTa => return commands::optimize_ta(&cfg, &mut out, cli.seed),
    };
    out.text(&format!("{name}_summary.txt"), &report)?;
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
