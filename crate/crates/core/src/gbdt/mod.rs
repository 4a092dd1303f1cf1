//! Gradient-boosted decision trees for imbalanced binary outcomes.

mod boost;
mod dataset;
mod importance;
mod metrics;
mod sample;
mod split;
mod tree;

pub use boost::{
    deviance, fit, fit_rows, sigmoid, BoostedModel, GbdtParams, SplitSearch, TrainingMeta,
    MODEL_FORMAT, MODEL_VERSION,
};
pub use dataset::{Dataset, FeatureKind};
pub use importance::feature_importance;
pub use metrics::{
    evaluate_scores, threshold_sweep, tune_threshold, ConfusionMatrix, Metrics, ThresholdObjective,
    ThresholdPoint,
};
pub use sample::undersample_majority;
pub use split::{midpoint, SplitCandidate};
pub use tree::{Node, SplitRule, Tree};

use crate::error::Result;

/// Scores `data` with `model` and tallies the confusion matrix at `threshold`.
pub fn evaluate(model: &BoostedModel, data: &Dataset, labels: &[bool], threshold: f64) -> Result<Metrics> {
    let scores = model.predict_dataset(data)?;
    evaluate_scores(&scores, labels, threshold)
}

/// Tunes the decision threshold of `model` on an evaluation set.
pub fn tune_model_threshold(
    model: &BoostedModel,
    data: &Dataset,
    labels: &[bool],
    objective: ThresholdObjective,
) -> Result<f64> {
    let scores = model.predict_dataset(data)?;
    tune_threshold(&scores, labels, objective)
}
