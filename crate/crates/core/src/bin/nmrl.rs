//! `nmrl` command line: `run`, `oracle-only` and `compare`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nmrl::harness::{
    compare_dirs, oracle_to_dir, run_to_dir, ExitStatus, Experiment, ExperimentConfig, Tolerance,
};
use nmrl::Error;

#[derive(Parser)]
#[command(
    name = "nmrl",
    version,
    about = "RL on non-Markov processes against exact oracles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the oracle, run every seed and write all artifacts.
    Run(RunArgs),
    /// Compute and write the oracle artifacts and bound reports only.
    OracleOnly(RunArgs),
    /// Field-wise numeric diff of two artifact directories.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `nmrl-out/<config stem>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds overriding the config.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct CompareArgs {
    dir_a: PathBuf,
    dir_b: PathBuf,
    /// Absolute tolerance.
    #[arg(long, default_value_t = 1e-12)]
    abs_tol: f64,
    /// Relative tolerance.
    #[arg(long, default_value_t = 1e-9)]
    rel_tol: f64,
}

fn load(args: &RunArgs) -> Result<(Experiment, PathBuf), Error> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seeds) = &args.seeds {
        config.seeds = seeds.clone();
        config.validate()?;
    }
    let out = args.out.clone().unwrap_or_else(|| {
        let stem = args.config.file_stem().unwrap_or_default();
        Path::new("nmrl-out").join(stem)
    });
    Ok((Experiment::load(config)?, out))
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T, Error> + Send,
) -> Result<T, Error> {
    match threads {
        Some(0) => Err(Error::Validation {
            path: "--threads".into(),
            message: "must be at least 1".into(),
        }),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Validation {
                path: "--threads".into(),
                message: e.to_string(),
            })?
            .install(f),
        None => f(),
    }
}

/// Progress lines on stdout; a closed pipe is not an error.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn execute(args: &RunArgs, oracle_only: bool) -> ExitStatus {
    let result = with_threads(args.threads, || {
        let (exp, out) = load(args)?;
        if oracle_only {
            let status = oracle_to_dir(&exp, &out)?;
            say(&format!("wrote oracle artifacts to {}", out.display()));
            Ok(status)
        } else {
            let report = run_to_dir(&exp, &out)?;
            for s in &report.seeds {
                let dist = s
                    .trace
                    .final_distance()
                    .map_or("n/a".to_string(), |d| format!("{d:.16e}"));
                let flag = if s.trace.diverged() { " diverged" } else { "" };
                say(&format!("seed {}: final distance {dist}{flag}", s.seed));
            }
            say(&format!("wrote artifacts to {}", out.display()));
            Ok(report.status())
        }
    });
    match result {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::Validation
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(ExitStatus::Validation.code() as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let status = match &cli.command {
        Command::Run(args) => execute(args, false),
        Command::OracleOnly(args) => execute(args, true),
        Command::Compare(args) => {
            let tol = Tolerance {
                abs: args.abs_tol,
                rel: args.rel_tol,
            };
            match compare_dirs(&args.dir_a, &args.dir_b, tol) {
                Ok(report) => {
                    say(report.render().trim_end());
                    if report.is_match() {
                        ExitStatus::Ok
                    } else {
                        ExitStatus::Mismatch
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitStatus::Validation
                }
            }
        }
    };
    ExitCode::from(status.code() as u8)
}
