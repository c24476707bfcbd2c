//! Config-driven front end of `dynlab`: one JSON document describes one
//! experiment, and each command turns it into CSV data and JSON verdicts.

pub mod config;
pub mod run;

pub use config::{parse_config, ExperimentConfig, ParsedConfig, SchemaError, SchemaErrors};
pub use run::{all_verdicts_pass, run_experiment, Command, RunError, RunOutcome, FAILED_MARKER};
