use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use msb_lab::lab::{default_config, run_command, Command, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "msb-lab",
    version,
    about = "Multi-marginal Schrödinger bridge laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML experiment file; the benchmark setup is used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// KL of the uniform chain against the number of intervals.
    RateSweep,
    /// KL of a single bridge against its length.
    EpsSweep,
    /// KL against the explicit bound.
    BoundCheck,
    /// Export Fokker-Planck marginals (and optional particles).
    Simulate,
    /// Solve one interval bridge and dump it.
    Bridge,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let command = match cli.command {
        Cmd::RateSweep => Command::RateSweep,
        Cmd::EpsSweep => Command::EpsSweep,
        Cmd::BoundCheck => Command::BoundCheck,
        Cmd::Simulate => Command::Simulate,
        Cmd::Bridge => Command::Bridge,
    };
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path),
        None => Ok(default_config(command)),
    };
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = cli.out.unwrap_or_else(|| config.output.dir.clone());
    match run_command(command, &config, &out) {
        Ok(outcome) => {
            for c in &outcome.checks {
                log::info!("{:?} {}: {}", c.status, c.name, c.detail);
            }
            for f in &outcome.files {
                log::info!("wrote {}", f.display());
            }
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
