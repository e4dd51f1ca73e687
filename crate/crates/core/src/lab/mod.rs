//! Experiment harness: configuration, invariant-set classification, and
//! the protocols behind the command-line tool.

pub mod cache;
pub mod classify;
pub mod config;
pub mod experiment;

pub use classify::{classify, Classification, ClassificationVerdict, InvariantSet, Prediction};
pub use config::{ExperimentConfig, ExperimentKind, InitialData};
pub use experiment::{run_experiment, ExperimentReport};
