//! Monte Carlo engine, estimators, sweeps and output.

pub mod config;
pub mod engine;
pub mod estimate;
pub mod output;
pub mod sweep;

pub use config::ExperimentConfig;
pub use engine::{run_trials, simulate_gains, with_workers, GainSample, Scenario, TrialRecord};
pub use estimate::{estimate_asc, estimate_sop, ks_statistic, MetricEstimate};
