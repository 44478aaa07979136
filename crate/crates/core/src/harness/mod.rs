//! Simulation experiments, data files and report output.

pub mod config;
pub mod experiment;
pub mod generate;
pub mod report;
pub mod ucr;

pub use config::{Covariance, ExperimentConfig, Method, Noise, VarianceMode};
pub use experiment::{
    run_ci, run_experiment, run_fpr, run_paired, run_timing, run_tpr, ExperimentReport, Summary, TimingRow, TrialRecord,
};
pub use generate::generate_pair;
pub use ucr::{load_ucr_pair, read_ucr, write_ucr, UcrRow};
