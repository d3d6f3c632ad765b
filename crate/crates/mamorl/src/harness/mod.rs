//! Experiment orchestration: flat `key = value` configs with `[section]`
//! headers, variant x seed grids with CSV output, the gradient-check
//! suite, and the CLI entry point.

mod cli;
mod config;
mod gradsuite;
mod grid;

pub use cli::cli;
pub use config::{parse_config, serialize_config, ExperimentConfig};
pub use gradsuite::{gradient_suite, GradCheckReport};
pub use grid::{read_front_csv, run_grid, CellResult, GridOutcome};
