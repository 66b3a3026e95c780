//! Experiment harness for cooperative XR codec-rate adaptation: seeded runs
//! of the learners and the APS baseline over the distance rings, with CSV,
//! SVG and checkpoint outputs.

pub mod checkpoint;
pub mod config;
pub mod experiment;
pub mod output;
pub mod plot;
pub mod stats;

pub use checkpoint::Checkpoint;
pub use config::{Algorithm, ExperimentConfig, RingName};
pub use experiment::{evaluate_checkpoint, execute, execute_plan, run_experiment, run_seed, RunRecord, RunSummary};
pub use output::{aggregate, emit_outputs, AggregateRow};
pub use stats::{mean_ci95, success_rate, MeanCi};
