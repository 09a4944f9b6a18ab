//! Config-driven experiment runner over the `gbsde` library.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;

pub use config::{Diagnostic, ExperimentConfig};
pub use run::{closed_form, exit, run, sha256_hex, RunError, RunOptions, RunSummary};

/// Annotated JSON Schema of experiment configs.
pub const SCHEMA: &str = include_str!("schema.json");
