//! Batch experiment runner: `cal run <experiment> [--config FILE]
//! [--seed N] [--out DIR]`. Exits nonzero when any assertion embedded in
//! the runner fails.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cal::experiments::{self, ExperimentKind};

#[derive(Parser)]
#[command(name = "cal", about = "Context-aware learning experiment harness", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its metrics into the output directory.
    Run {
        /// reconstruction | lissajous | popeq | persistence | shapes | association
        #[arg(value_parser = parse_experiment)]
        experiment: ExperimentKind,
        /// TOML configuration overriding the built-in defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed; every stochastic choice derives from it.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Output directory for CSV, graymaps and snapshots.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn parse_experiment(s: &str) -> Result<ExperimentKind, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            experiment,
            config,
            seed,
            out,
        } => {
            let config_text = match config {
                Some(path) => match std::fs::read_to_string(&path) {
                    Ok(text) => Some(text),
                    Err(e) => {
                        eprintln!("cannot read {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                },
                None => None,
            };
            let out_dir = out.join(experiment.name());
            match experiments::run(experiment, config_text.as_deref(), seed, &out_dir) {
                Ok(report) => {
                    print!("{}", report.render());
                    println!("artifacts in {}", out_dir.display());
                    if report.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
