//! `recharge`: run recharge-time experiments from a config file.
//!
//! Exit codes: 0 success, 1 invalid input, 2 a curve exceeded its KS
//! tolerance, 3 I/O failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use recharge_core::config::ExperimentSet;
use recharge_core::experiment::{compare_formulas, run_experiment, write_compare_csv};
use recharge_core::{parse_config, Error};

#[derive(Parser)]
#[command(
    name = "recharge",
    version,
    about = "Recharge time of an energy-harvesting battery"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every curve in the config and compare it with theory.
    Run {
        config: PathBuf,
        /// Output directory for CSV files and manifest.json.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config replication count.
        #[arg(long)]
        replications: Option<u64>,
        /// Worker threads; defaults to one per core.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Tabulate the normal-approximation error against the exact series.
    Compare {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

enum Failure {
    Tolerance,
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn load(path: &Path) -> Result<ExperimentSet, Error> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

fn run(
    config: &Path,
    out: &Path,
    seed: Option<u64>,
    replications: Option<u64>,
    workers: Option<usize>,
) -> Result<(), Failure> {
    let mut set = load(config)?;
    if let Some(s) = seed {
        set = set.with_seed(s);
    }
    if let Some(r) = replications {
        set = set.with_replications(r)?;
    }
    if workers == Some(0) {
        return Err(Error::InvalidParameter {
            name: "workers".into(),
            constraint: "must be >= 1".into(),
        }
        .into());
    }
    let manifest = run_experiment(&set, out, workers)?;
    println!("{:<44} {:>9} {:>9} {:>6}", "curve", "ks", "tol", "");
    for c in &manifest.curves {
        let warn = if c.truncation_warning {
            " (truncated series)"
        } else {
            ""
        };
        println!(
            "{:<44} {:>9.5} {:>9.5} {:>6}{warn}",
            c.file,
            c.ks_distance,
            c.ks_tolerance,
            if c.pass { "ok" } else { "FAIL" }
        );
    }
    println!("wrote {}", out.join("manifest.json").display());
    if manifest.all_pass {
        Ok(())
    } else {
        Err(Failure::Tolerance)
    }
}

fn compare(config: &Path, out: &Path) -> Result<(), Failure> {
    let set = load(config)?;
    let report = compare_formulas(&set)?;
    fs::create_dir_all(out).map_err(|source| Error::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let path = write_compare_csv(&out.join(format!("{}_compare.csv", set.name)), &report)?;
    println!(
        "{:>10} {:>10} {:>12} {:>10}",
        "experiment", "u", "max gap", "at t"
    );
    for r in &report.rows {
        println!(
            "{:>10} {:>10} {:>12.6e} {:>10.4}",
            r.experiment, r.threshold, r.max_gap, r.t_at_max
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            replications,
            workers,
        } => run(&config, &out, seed, replications, workers),
        Command::Compare { config, out } => compare(&config, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Tolerance) => {
            eprintln!("error: at least one curve exceeded its KS tolerance");
            ExitCode::from(2)
        }
        Err(Failure::Core(e @ Error::Io { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
