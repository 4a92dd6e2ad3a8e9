//! Config-driven experiments behind the `nmrl` CLI.
//!
//! A run resolves an [`ExperimentConfig`] against its model, computes the
//! oracle (which never depends on seeds), runs the learner once per seed in
//! parallel and writes an artifact directory:
//!
//! - `config.json`, `model.toml`: the resolved inputs.
//! - `oracle/`: `summary.json`, `pi.csv`, `mdp.csv`, `kernel.csv`,
//!   `target.csv`, and when computed `values.csv`, `filter_stability.csv`,
//!   `mixing.csv`.
//! - `bounds.json`: error-bound reports.
//! - `traces/seed_<n>.csv`: checkpointed iterates and distances.
//! - `summary.json`: per-seed outcomes and the exit code.

mod compare;
mod config;
mod experiment;
pub mod output;
mod pipeline;
mod run;

pub use compare::{compare_dirs, CompareReport, FileDiff, Tolerance};
pub use config::{
    BasisConfig, ExperimentConfig, LearnerConfig, LearnerKind, OracleConfig, PolicyConfig,
};
pub use experiment::{Experiment, Features};
pub use pipeline::{
    compute_oracle, greedy_from_q, push_down, OracleOutputs, BOUND_TOL, ORACLE_TOL, Q_ITERATION_CAP,
};
pub use run::{
    oracle_to_dir, run_experiment, run_seed, run_to_dir, write_oracle, write_runs, ExitStatus,
    RunReport, SeedResult,
};
