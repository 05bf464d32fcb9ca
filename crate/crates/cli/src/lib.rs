//! Experiment runner: manifests, resumable execution, result records,
//! reports and growth-exponent calibration.

pub mod calibrate;
pub mod error;
pub mod exec;
pub mod manifest;
pub mod pathdump;
pub mod records;
pub mod report;
pub mod runner;

pub use error::{CliError, CliResult};
pub use manifest::Manifest;
pub use runner::{run, RunOptions, RunSummary};
