//! Monte Carlo experiment harness for the `irslink-core` simulator:
//! configuration ingestion, the seeded trial pipeline, parameter sweeps
//! over the reference experiment axes, and deterministic CSV/JSON
//! emission.

pub mod config;
pub mod emit;
pub mod report;
pub mod run;

pub use config::{dbm_to_watts, noise_power, ConfigError, ExperimentConfig};
pub use report::{AlgoRecord, PowerRecord, SweepRow, SweepTable, TopologyRecord, TrialReport};
pub use run::{apply_axis, run_trial, run_trials, sweep, SweepAxis};
