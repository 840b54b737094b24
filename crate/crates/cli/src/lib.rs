//! Configuration parsing and experiment dispatch for the `riesz` binary.

pub mod config;
pub mod run;

pub use config::{parse_config, parse_config_for, ConfigError, ConfigErrors, ExperimentConfig, Mode, Settings};
pub use run::{load_config, output_dir, run_experiment, Outcome, RunError};
