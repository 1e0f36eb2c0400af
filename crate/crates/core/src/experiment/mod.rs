//! Config-driven experiment runner behind the `ocm` binary.

mod compare;
pub mod config;
mod run;

pub use compare::{compare, compare_files, CompareReport};
pub use config::ExperimentConfig;
pub use run::{build_grid, build_state, error_report, exit_code, run, run_config, BuiltState, RunOptions, RunReport};
