//! Offline evaluation: train/test splits, precision/recall@n, and
//! experiment orchestration.

mod experiment;
mod metrics;
mod split;

use thiserror::Error;

pub use experiment::{evaluate_schemes, run_experiment, EvalReport, ExperimentConfig, SplitResult};
pub use metrics::{mean_std, precision_recall_at_n};
pub use split::{make_splits, Scenario, Split, SplitSet};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Weight(#[from] crate::weighting::WeightError),
    #[error(transparent)]
    Recommend(#[from] crate::recommend::RecommendError),
}
