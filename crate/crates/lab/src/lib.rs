//! Experiment runner for `toral-core`: configuration, file formats,
//! report emission and the registry of named experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod emit;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod registry;

pub use config::{ExperimentConfig, Format};
pub use emit::emit_report;
pub use error::{LabError, Result};
pub use registry::run_experiment;
