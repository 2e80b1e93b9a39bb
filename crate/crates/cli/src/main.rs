use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pathsel_core::harness::{self, ExperimentConfig};
use pathsel_core::Error;

/// Policy-guided feature-subset search for path loss prediction.
#[derive(Debug, Parser)]
#[command(name = "pathsel", version, about)]
struct Cli {
    /// JSON experiment config; unset keys keep their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate scenes and write per-scenario and pooled dataset CSVs.
    Generate,
    /// Run the agent search and all baselines.
    Run {
        #[arg(long, value_name = "ID")]
        task: Option<String>,
    },
    /// Re-evaluate the baselines against a previous run.
    RunBaselines {
        #[arg(long, value_name = "ID")]
        task: Option<String>,
    },
    /// Summarize a completed run into a text table and figure data.
    Report,
    /// Generate and run over consecutive master seeds.
    Sweep {
        #[arg(long, value_name = "K", default_value_t = 10)]
        seeds: usize,
    },
}

fn load(cli: &Cli) -> pathsel_core::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref(), std::env::vars())?;
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> pathsel_core::Result<()> {
    let cfg = load(cli)?;
    harness::with_jobs(cfg.jobs, || match &cli.command {
        Command::Generate => {
            for path in harness::generate(&cfg)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Run { task } => {
            let table = harness::run(&cfg, task.as_deref())?;
            print!("{}", table.to_text());
            Ok(())
        }
        Command::RunBaselines { task } => {
            let table = harness::run_baselines(&cfg, task.as_deref())?;
            print!("{}", table.to_text());
            Ok(())
        }
        Command::Report => {
            let summary = harness::report(&cfg.results_dir())?;
            print!("{}", summary.text);
            Ok(())
        }
        Command::Sweep { seeds } => {
            harness::sweep(&cfg, *seeds)?;
            let path = cfg.output_dir.join("sweep_summary.txt");
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Io { path, source: e })?;
            print!("{text}");
            Ok(())
        }
    })?
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
