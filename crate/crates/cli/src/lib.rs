//! Experiment runner: parses a JSON config, runs one of six verification
//! scenarios and writes CSV/JSON artifacts plus a PASS/FAIL `report.json`.

// `!(x > 0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{parse_config, ExperimentConfig, Scenario};
pub use error::CliError;
pub use report::{Check, Claim, RateFit, Report};
pub use run::run_experiment;
