//! Energy-based models (RBM, DBN, DBM) with metaheuristic hyperparameter
//! tuning.
//!
//! The crate trains Bernoulli RBMs with contrastive divergence, stacks them
//! greedily into deep belief networks or deep Boltzmann machines, and tunes
//! per-layer hyperparameters with population-based optimizers that all
//! implement the same ask/tell protocol.

pub mod codec;
pub mod datasets;
pub mod deep;
pub mod error;
pub mod harness;
pub mod hyperspace;
pub mod metaheuristics;
pub mod rbm;
pub mod seeding;
pub mod stats;

pub use datasets::{BinaryDataset, DataFormat};
pub use deep::{ModelKind, StackedModel};
pub use error::{Error, ErrorClass, Result};
pub use harness::{ExperimentConfig, RunReport};
pub use hyperspace::{Candidate, LayerBounds, LayerHyperparams, Range, SearchSpace};
pub use metaheuristics::{
    run_optimizer, Algorithm, OptimizationOutcome, Optimizer, OptimizerConfig, TraceRow,
};
pub use rbm::{Learner, PcdChains, RbmLayer, TrainConfig};
pub use stats::{WilcoxonMethod, WilcoxonResult};
