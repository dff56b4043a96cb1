//! Batch experiment runner for QLSA, LSA and cosine retrieval on SMART
//! test collections.

pub mod config;
pub mod experiment;

pub use config::{ExperimentConfig, RunMethod};
pub use experiment::{best_r, load_collection, run_experiment, Report, Stage};
