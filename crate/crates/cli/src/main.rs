use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use maxmin_core::harness::{self, Algorithm, ExperimentConfig, RunRecord};
use maxmin_core::Error;

#[derive(Parser)]
#[command(name = "maxmin", version, about = "Distributed max-min planning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm (or all of them) on an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// proposed, rollout_baseline, pomcpow_baseline, optimal or all.
        #[arg(long)]
        algo: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Overlay plot and summary table for existing run directories.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the oracle and property checks.
    Verify,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_config() => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn run(config: &Path, algo: Option<&str>, seed: Option<u64>, out: Option<PathBuf>) -> anyhow::Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let algos = match algo {
        Some("all") => Algorithm::ALL.to_vec(),
        Some(name) => vec![Algorithm::parse(name)?],
        None => vec![cfg.experiment.algorithm],
    };
    let seed = seed.unwrap_or(cfg.experiment.seed);
    let out = out
        .or_else(|| cfg.experiment.output.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(config.file_stem().unwrap_or_default()));
    let exp = cfg.resolve_experiment()?;

    let mut records: Vec<RunRecord> = Vec::new();
    for algo in algos {
        let dir = out.join(algo.name());
        let mut record = harness::new_record(&exp, algo, seed);
        let result = harness::execute(&exp, &mut record);
        harness::write_run(&record, &dir).with_context(|| format!("writing {}", dir.display()))?;
        result.with_context(|| format!("{algo} stopped early; partial record in {}", dir.display()))?;
        println!(
            "{algo}: worst cumulative {:.4}, final worst reward {:.4} -> {}",
            record.worst_cumulative(),
            record.final_worst_reward().unwrap_or(f64::NAN),
            dir.display()
        );
        records.push(record);
    }
    if records.len() > 1 {
        for f in harness::report(&records, &out)? {
            println!("wrote {}", f.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, algo, seed, out } => run(&config, algo.as_deref(), seed, out),
        Command::Compare { runs, out } => harness::compare(&runs, &out).map_err(Into::into).map(|files| {
            for f in files {
                println!("wrote {}", f.display());
            }
        }),
        Command::Verify => {
            let checks = maxmin_core::verify::run_all();
            for c in &checks {
                let mark = if c.passed { "PASS" } else { "FAIL" };
                println!("{mark} {} ({:.2}s): {}", c.name, c.seconds, c.detail);
            }
            if checks.iter().all(|c| c.passed) {
                Ok(())
            } else {
                Err(anyhow::anyhow!("some checks failed"))
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
