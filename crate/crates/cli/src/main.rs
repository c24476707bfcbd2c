use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dynlab_cli::{parse_config, run_experiment, Command, RunError};

/// Simulate stochastic inertial dynamics and check their long-time rates.
#[derive(Parser)]
#[command(name = "dynlab", version)]
struct Cli {
    command: Command,
    /// Experiment description (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Added to every seed of the config.
    #[arg(long, default_value_t = 0)]
    seed_offset: u64,
}

const EXIT_VERDICT: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let parsed = match parse_config(&text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out = cli
        .out
        .or_else(|| parsed.config.output.clone())
        .unwrap_or_else(|| PathBuf::from("dynlab-out"));
    match run_experiment(cli.command, &parsed, &out, cli.seed_offset) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for a in &outcome.artifacts {
                println!("{}", a.display());
            }
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("at least one verdict failed");
                ExitCode::from(EXIT_VERDICT)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                RunError::Config(_) => EXIT_CONFIG,
                _ => EXIT_RUNTIME,
            })
        }
    }
}
