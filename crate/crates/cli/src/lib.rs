//! Batch experiment runner behind the `qrlab` binary.
//!
//! A run is `parse_config` → `run_experiment` → `write_outputs`. Configs
//! are strict JSON; reports are schema-versioned JSON with CSV data files
//! and optional SVG plots next to them.

pub mod config;
pub mod report;
pub mod run;
pub mod svg;

pub use config::{load_config, parse_config, ConfigError, Experiment, ExperimentConfig};
pub use report::{write_outputs, ExperimentReport, Outcome, Status, REPORT_SCHEMA};
pub use run::{list_zoo, run_experiment, zoo_text};

pub const EXIT_OK: i32 = 0;
/// Malformed config or a precondition violation; nothing was computed.
pub const EXIT_CONFIG: i32 = 2;
/// A module reported a numerical failure; partial results were written.
pub const EXIT_NUMERICAL: i32 = 3;
