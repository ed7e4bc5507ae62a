//! Experiment orchestration: configuration, the tuning pipeline, and
//! report output.

pub mod config;
pub mod experiment;
pub mod report;

pub use config::{DatasetConfig, ExperimentConfig, ModelConfig, TrainingConfig};
pub use experiment::{
    fitness_of, run_experiment, run_experiment_on, train_model, EpochPoint, FitnessContext,
    RunRecord, RunReport,
};
pub use report::{compare_reports, emit_outputs, load_report, ComparisonCell, ComparisonMatrix};
