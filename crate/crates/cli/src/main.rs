use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rbm_complexity::rademacher::ClassName;
use rbm_complexity_cli::commands;
use rbm_complexity_cli::verify::{run_all, VerifyOptions};
use rbm_complexity_cli::{CliError, CliResult, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "rbmc", version, about = "Rademacher complexity experiments for RBM likelihoods")]
struct Cli {
    /// `key = value` config file; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write dataset.txt (and ground_truth.txt for the RBM source).
    GenData,
    /// Write bounds.csv over the config grid.
    Bounds,
    /// Estimate one class and write estimate_<CLASS>.csv.
    Estimate {
        /// F, G, H, LOGLIK_PART1, T, CD1_LOGZ or FINITE_T.
        #[arg(long)]
        class: String,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Member file for FINITE_T.
        #[arg(long)]
        members: Option<PathBuf>,
    },
    /// Join estimates to bounds; write comparison.csv.
    Compare,
    /// CD-1 training with exact audits; write trace.csv.
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run every invariant suite.
    Verify,
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    match cli.command {
        Command::GenData => {
            let data = commands::gen_data(&cfg)?;
            println!("wrote {} samples of width {}", data.len(), data.dim());
        }
        Command::Bounds => {
            let table = commands::bounds(&cfg)?;
            println!("wrote {} bound rows, skipped {}", table.rows.len(), table.skipped.len());
        }
        Command::Estimate { class, data, members } => {
            let class: ClassName = class.parse()?;
            let r = commands::estimate(&cfg, class, data.as_deref(), members.as_deref())?;
            println!(
                "{}: mean {} stderr {} over {} sigma vectors",
                r.class_name, r.mean, r.stderr, r.num_sigma
            );
        }
        Command::Compare => {
            let c = commands::compare(&cfg)?;
            let ok = c.rows.iter().filter(|r| r.satisfied).count();
            println!(
                "{} comparison rows, {ok} satisfied, {} join mismatches",
                c.rows.len(),
                c.mismatches.len()
            );
            if let Some(inc) = c.increase {
                println!(
                    "part1 {} -> part1 + cd1 log Z {} (holds: {})",
                    inc.part1_mean, inc.combined_mean, inc.increase_holds
                );
            }
        }
        Command::Train { data } => {
            let trace = commands::train(&cfg, data.as_deref())?;
            if let (Some(first), Some(last)) = (trace.first(), trace.last()) {
                println!(
                    "epoch {} loglik {} -> epoch {} loglik {}",
                    first.epoch, first.mean_exact_loglik, last.epoch, last.mean_exact_loglik
                );
            }
        }
        Command::Verify => {
            let reports = run_all(cfg.seed, VerifyOptions::default());
            let mut failed = Vec::new();
            for r in &reports {
                println!(
                    "{:<14} {:>7} checks {:>5} failures  worst {:.3e}  {:.2?}",
                    r.name, r.checks, r.failures, r.worst, r.elapsed
                );
                if !r.passed() {
                    failed.push(r.name);
                }
            }
            if !failed.is_empty() {
                return Err(CliError::SuiteFailure(failed.join(", ")));
            }
            println!("all suites passed");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
