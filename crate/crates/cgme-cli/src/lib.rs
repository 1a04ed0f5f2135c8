//! Experiment runner over `cgme-core`: JSON configs in, CSV tables out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
