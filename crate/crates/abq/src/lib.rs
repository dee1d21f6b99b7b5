//! Experiment harness for branching Q-networks: configuration, seeded runs,
//! CSV/JSON logs, checkpoints, learning-curve plots and run comparison.
//!
//! The `abq` binary wraps these modules; see `abq --help`.

pub mod checkpoint;
pub mod compare;
pub mod config;
pub mod csvlog;
pub mod curves;
pub mod discover;
mod error;
pub mod plot;
pub mod report;
pub mod runner;

pub use error::{HarnessError, Result};
