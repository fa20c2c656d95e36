//! `moneta` — run, verify, sweep, and summarize exchange-dynamics scenarios.
//!
//! Exit status: 0 on success, 1 on assertion/runtime failure, 2 on
//! configuration errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use moneta_cli::suite::{parse_and_validate, ScenarioSuite};
use moneta_cli::summarize::summarize;
use moneta_cli::verify::verify;
use moneta_cli::writer::{write_trajectory, OutputFormat};
use moneta_cli::CliError;
use moneta_core::engine::run;
use moneta_core::Rational;

#[derive(Parser)]
#[command(
    name = "moneta",
    about = "Deterministic pairwise money-transfer and bounded-confidence simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunOptions {
    /// Output directory for trajectory files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Trajectory file format.
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    /// Use the exact rational backend instead of f64.
    #[arg(long)]
    exact: bool,
    /// Override the snapshot recording cadence.
    #[arg(long)]
    record_every: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of a suite and write trajectories plus replay sidecars.
    Run {
        config: PathBuf,
        #[command(flatten)]
        options: RunOptions,
    },
    /// Re-run every seed with per-step invariant assertions and report
    /// pass/fail per check.
    Verify {
        config: PathBuf,
        /// Use the exact rational backend instead of f64.
        #[arg(long)]
        exact: bool,
    },
    /// Run a seed range (overriding the suite's seed list).
    Sweep {
        config: PathBuf,
        /// Seed range: `a..b` (half-open) or `a..=b` (inclusive).
        #[arg(long)]
        seeds: String,
        #[command(flatten)]
        options: RunOptions,
    },
    /// Summarize written trajectory files into outcome tables and curves.
    Summarize {
        /// Trajectory files (.csv or .jsonl) with optional .meta.toml sidecars.
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Output directory for summary.csv and curves.csv.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load_suite(path: &PathBuf) -> Result<ScenarioSuite, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let suite = parse_and_validate(&text)?;
    for warning in &suite.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(suite)
}

fn parse_seed_range(spec: &str) -> Result<Vec<u64>, CliError> {
    let bad = || {
        CliError::Config(format!(
            "seed range {spec:?} must look like a..b (half-open) or a..=b (inclusive)"
        ))
    };
    let (lo, hi, inclusive) = if let Some((lo, hi)) = spec.split_once("..=") {
        (lo, hi, true)
    } else if let Some((lo, hi)) = spec.split_once("..") {
        (lo, hi, false)
    } else {
        return Err(bad());
    };
    let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
    let seeds: Vec<u64> = if inclusive {
        (lo..=hi).collect()
    } else {
        (lo..hi).collect()
    };
    if seeds.is_empty() {
        return Err(CliError::Config(format!("seed range {spec:?} is empty")));
    }
    Ok(seeds)
}

/// Runs all seeds of the suite, writing one trajectory per seed plus one
/// merged summary in seed order.
fn run_suite(mut suite: ScenarioSuite, options: &RunOptions) -> Result<(), CliError> {
    if let Some(k) = options.record_every {
        if k == 0 {
            return Err(CliError::Config("record-every must be at least 1".into()));
        }
        suite.config.record_every = k;
    }
    let seeds = suite.seeds.clone();
    let mut data_files = Vec::with_capacity(seeds.len());
    for &seed in &seeds {
        let mut config = suite.config.clone();
        config.seed = seed;
        let stem = format!("{}-seed{seed}", suite.name.as_str());
        let written = if options.exact {
            let traj = run::<Rational>(&config)?;
            print_outcome(
                &stem,
                traj.consensus_time,
                traj.total_applied,
                traj.records.len(),
            );
            write_trajectory(&traj, &suite, options.format, &options.out, &stem)?
        } else {
            let traj = run::<f64>(&config)?;
            print_outcome(
                &stem,
                traj.consensus_time,
                traj.total_applied,
                traj.records.len(),
            );
            write_trajectory(&traj, &suite, options.format, &options.out, &stem)?
        };
        data_files.push(written[0].clone());
        for path in written {
            println!("wrote {}", path.display());
        }
    }
    let summary = summarize(&data_files)?;
    for path in summary.write_files(&options.out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn print_outcome(stem: &str, consensus: Option<u64>, applied: u64, steps: usize) {
    println!(
        "{stem}: {steps} steps, {applied} applied, consensus {}",
        match consensus {
            Some(t) => format!("at step {t}"),
            None => "not reached".into(),
        }
    );
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, options } => {
            let suite = load_suite(&config)?;
            run_suite(suite, &options)
        }
        Command::Verify { config, exact } => {
            let suite = load_suite(&config)?;
            let report = verify(&suite, exact)?;
            print!("{}", report.render());
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Verification("verification failed".into()))
            }
        }
        Command::Sweep {
            config,
            seeds,
            options,
        } => {
            let mut suite = load_suite(&config)?;
            suite.seeds = parse_seed_range(&seeds)?;
            run_suite(suite, &options)
        }
        Command::Summarize { files, out } => {
            let summary = summarize(&files)?;
            print!("{}", summary.render_table());
            for path in summary.write_files(&out)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
