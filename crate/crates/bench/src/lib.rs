//! Seeded benchmark batches for `stiefel-opt`: per-run and min/mean/max CSV
//! reports, iteration histories, alpha sweeps and monotone vs non-monotone
//! comparisons.

use std::path::PathBuf;

pub mod config;
pub mod report;
pub mod run;

pub use config::{preset_mix, ExperimentConfig, SolverOverrides};
pub use report::{Aggregate, RunRecord, RunSummary, Stats};
pub use run::{compare_modes, run_experiment, run_sweep, Comparison, ExperimentOutcome, SweepRow};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        source: csv::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] stiefel_opt::Error),
}
