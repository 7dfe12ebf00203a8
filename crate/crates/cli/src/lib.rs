//! Configuration, orchestration and artifact emission for irrmc experiments,
//! plus the acceptance suite shared by `irrmc selftest` and the test target.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod config;
pub mod error;
pub mod run;

pub use config::{parse_config, ExperimentConfig, ExperimentKind};
pub use error::{CliError, Result};
pub use run::{run_experiment, Check, RunSummary, Status};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "IRRMC_OUT_DIR";
