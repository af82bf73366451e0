//! Config-driven experiment runner: operator catalog, batch execution of
//! iteration runs / center solves / verification suites, CSV and JSON
//! emission with reproducible bytes.

mod catalog;
mod config;
mod output;
mod runner;

pub use catalog::{build_operator, list_catalog};
pub use config::{ExperimentConfig, Format, OperatorCfg, OutputCfg, RunKind, SpaceCfg};
pub use output::format_f64;
pub use runner::{run_experiment, validate_config, Overrides, RunOutcome, OUT_DIR_ENV};
