use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use metasurf::experiment::{run_experiment, ExperimentKind};
use metasurf::{Config, Exec};

/// Batch runner for the metasurf beamforming experiments.
#[derive(Parser)]
#[command(name = "metasurf", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in the config and write CSVs plus a manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Run everything on the calling thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Check a config document and report the first problem.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the experiment kinds a config can request.
    ListExperiments,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            sequential,
        } => match run(&config, seed, &out, sequential) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::FAILURE
            }
        },
        Command::Validate { config } => match Config::from_path(&config) {
            Ok(cfg) => {
                println!(
                    "{}: ok ({} cells, N_tx {}, N_ris {}, experiment {})",
                    config.display(),
                    cfg.n_cells(),
                    cfg.arrays.n_tx,
                    cfg.arrays.n_ris,
                    cfg.experiment.kind.name()
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{}: {e}", config.display());
                ExitCode::FAILURE
            }
        },
        Command::ListExperiments => {
            for kind in ExperimentKind::ALL {
                println!("{:<10} {}", kind.name(), kind.description());
            }
            ExitCode::SUCCESS
        }
    }
}

fn run(config: &Path, seed: u64, out: &Path, sequential: bool) -> anyhow::Result<()> {
    metasurf::par::init_workers_from_env();
    let cfg = Config::from_path(config).with_context(|| format!("loading {}", config.display()))?;
    let exec = if sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    let report = run_experiment(&cfg, seed, out, exec)
        .with_context(|| format!("running {}", cfg.experiment.kind.name()))?;
    for f in &report.files {
        println!("{}", f.display());
    }
    Ok(())
}
