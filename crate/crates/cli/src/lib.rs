//! Experiment runner for the `dysplit` solvers: layered TOML configuration,
//! parallel trials with per-trial seeds, CSV/JSON result tables and ratings
//! file ingestion.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod config;
pub mod diagnose;
pub mod error;
pub mod experiment;
pub mod presets;
pub mod ratings;
pub mod table;

pub use config::{ExperimentConfig, Method, Task};
pub use error::CliError;
pub use experiment::{run_experiment, ExperimentReport};
pub use ratings::{ingest_ratings, RatingsDataset};
pub use table::{Format, ResultTable};
