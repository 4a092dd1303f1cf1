//! Stagewise additive boosting under binomial deviance.
//!
//! With labels `y ∈ {−1, +1}` and raw score `f` on the log-odds scale, each
//! row contributes `log(1 + exp(−y f))` to the training deviance. Every
//! iteration fits a regression tree to the pseudo-residuals `t − p` (with
//! Hessian weights `p (1 − p)`), sets each leaf to one Newton step
//! `Σ(t − p) / Σ p (1 − p)`, and adds the tree scaled by the learning rate.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{check_row, Dataset, FeatureKind};
use super::sample::undersample_majority;
use super::split::{canonical_totals, histogram_edges, SplitContext};
use super::tree::{Node, Tree};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "propensity-gbdt";
pub const MODEL_VERSION: u32 = 1;

const P_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SplitSearch {
    Exact,
    Histogram { max_bins: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbdtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
    pub seed: u64,
    /// Majority:minority ratio after under-sampling; `None` trains on all rows.
    pub undersample_ratio: Option<f64>,
    pub split_search: SplitSearch,
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_depth: 3,
            learning_rate: 0.1,
            min_leaf: 20,
            seed: 0,
            undersample_ratio: Some(1.0),
            split_search: SplitSearch::Exact,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "learning_rate {} outside (0, 1]",
                self.learning_rate
            )));
        }
        if self.max_depth == 0 && self.n_trees > 0 {
            return Err(Error::InvalidParameter("max_depth must be at least 1".into()));
        }
        if let Some(r) = self.undersample_ratio {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "undersample_ratio {r} must be positive"
                )));
            }
        }
        if let SplitSearch::Histogram { max_bins } = self.split_search {
            if max_bins < 2 {
                return Err(Error::InvalidParameter("histogram needs at least 2 bins".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub undersample_ratio: Option<f64>,
    pub n_train_rows: usize,
    pub train_positive_rate: f64,
    /// Deviance before the first tree and after each tree.
    pub training_deviance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub format: String,
    pub version: u32,
    pub feature_names: Vec<String>,
    pub feature_kinds: Vec<FeatureKind>,
    pub learning_rate: f64,
    pub base_score: f64,
    /// Decision threshold on `predict_proba`; a score at or above it is positive.
    pub threshold: f64,
    pub trees: Vec<Tree>,
    pub meta: TrainingMeta,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(x))` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Binomial deviance `Σ log(1 + exp(−y f))` over `rows`.
pub fn deviance(raw: &[f64], labels: &[bool], rows: &[usize]) -> f64 {
    rows.iter()
        .map(|&r| {
            let y = if labels[r] { 1.0 } else { -1.0 };
            softplus(-y * raw[r])
        })
        .sum()
}

fn check_labels(labels: &[bool], rows: &[usize]) -> Result<(usize, usize)> {
    let pos = rows.iter().filter(|&&r| labels[r]).count();
    let neg = rows.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateLabels(format!(
            "{pos} positive and {neg} negative training rows"
        )));
    }
    Ok((pos, neg))
}

/// Fits a boosted model, under-sampling the majority class first when
/// `params.undersample_ratio` is set.
pub fn fit(data: &Dataset, labels: &[bool], params: &GbdtParams) -> Result<BoostedModel> {
    if labels.len() != data.n_rows() {
        return Err(Error::InvalidParameter(format!(
            "{} labels for {} rows",
            labels.len(),
            data.n_rows()
        )));
    }
    let rows = match params.undersample_ratio {
        Some(ratio) => undersample_majority(labels, ratio, params.seed)?,
        None => (0..labels.len()).collect(),
    };
    fit_rows(data, labels, &rows, params)
}

/// Fits on exactly the given rows; no sampling takes place.
pub fn fit_rows(
    data: &Dataset,
    labels: &[bool],
    rows: &[usize],
    params: &GbdtParams,
) -> Result<BoostedModel> {
    params.validate()?;
    if rows.len() < 2 {
        return Err(Error::UndersizedSample(format!(
            "{} training rows, need at least 2",
            rows.len()
        )));
    }
    let (pos, _) = check_labels(labels, rows)?;
    for &r in rows {
        check_row(data.kinds(), &data.row(r), r)?;
    }

    let rate = pos as f64 / rows.len() as f64;
    let base_score = (rate / (1.0 - rate)).ln();
    let edges: Option<Vec<Vec<f64>>> = match params.split_search {
        SplitSearch::Exact => None,
        SplitSearch::Histogram { max_bins } => Some(
            (0..data.n_features())
                .map(|f| match data.kinds()[f] {
                    FeatureKind::Numeric => histogram_edges(data.column(f), rows, max_bins),
                    FeatureKind::Categorical { .. } => Vec::new(),
                })
                .collect(),
        ),
    };

    let n = data.n_rows();
    let mut raw = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut training_deviance = vec![deviance(&raw, labels, rows)];

    for iteration in 0..params.n_trees {
        for &r in rows {
            let p = sigmoid(raw[r]).clamp(P_FLOOR, 1.0 - P_FLOOR);
            grad[r] = if labels[r] { 1.0 - p } else { -p };
            hess[r] = p * (1.0 - p);
        }
        let ctx = SplitContext {
            data,
            grad: &grad,
            hess: &hess,
            min_leaf: params.min_leaf,
            edges: edges.as_deref(),
        };
        let tree = grow_tree(&ctx, rows, params.max_depth);
        for &r in rows {
            raw[r] += params.learning_rate * tree.predict(&data.row(r));
        }
        let dev = deviance(&raw, labels, rows);
        log::trace!("iteration {iteration}: deviance {dev}");
        training_deviance.push(dev);
        trees.push(tree);
    }

    Ok(BoostedModel {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        feature_names: data.names().to_vec(),
        feature_kinds: data.kinds().to_vec(),
        learning_rate: params.learning_rate,
        base_score,
        threshold: 0.5,
        trees,
        meta: TrainingMeta {
            seed: params.seed,
            n_trees: params.n_trees,
            max_depth: params.max_depth,
            min_leaf: params.min_leaf,
            undersample_ratio: params.undersample_ratio,
            n_train_rows: rows.len(),
            train_positive_rate: rate,
            training_deviance,
        },
    })
}

fn grow_tree(ctx: &SplitContext<'_>, rows: &[usize], max_depth: usize) -> Tree {
    let mut nodes = Vec::new();
    grow(ctx, rows.to_vec(), max_depth, &mut nodes);
    Tree { nodes }
}

fn grow(ctx: &SplitContext<'_>, rows: Vec<usize>, depth_left: usize, nodes: &mut Vec<Node>) -> usize {
    let totals = canonical_totals(ctx.grad, ctx.hess, &rows);
    let id = nodes.len();
    let newton = if totals.h > 0.0 { totals.g / totals.h } else { 0.0 };
    nodes.push(Node::Leaf { value: newton });
    if depth_left == 0 {
        return id;
    }
    let Some(split) = ctx.best_split(&rows, totals) else {
        return id;
    };
    let col = ctx.data.column(split.feature);
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .iter()
        .partition(|&&r| split.rule.goes_left(col[r]).unwrap_or(split.missing_left));
    drop(rows);
    let left = grow(ctx, left_rows, depth_left - 1, nodes);
    let right = grow(ctx, right_rows, depth_left - 1, nodes);
    nodes[id] = Node::Split {
        feature: split.feature,
        rule: split.rule,
        missing_left: split.missing_left,
        left,
        right,
        gain: split.gain,
        cover: split.n_left + split.n_right,
    };
    id
}

impl BoostedModel {
    /// Raw log-odds score.
    pub fn decision_function(&self, row: &[f64]) -> Result<f64> {
        check_row(&self.feature_kinds, row, 0).map_err(|e| match e {
            Error::NonFiniteFeature { column, .. } => Error::NonFiniteFeature { row: 0, column },
            other => other,
        })?;
        let sum: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
        Ok(self.base_score + self.learning_rate * sum)
    }

    /// Probability of the positive class, strictly inside `(0, 1)`.
    pub fn predict_proba(&self, row: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.decision_function(row)?).clamp(P_FLOOR, 1.0 - P_FLOOR))
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<f64>> {
        if data.n_features() != self.feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_names.len(),
                got: data.n_features(),
            });
        }
        (0..data.n_rows())
            .map(|r| {
                self.predict_proba(&data.row(r)).map_err(|e| match e {
                    Error::NonFiniteFeature { column, .. } => Error::NonFiniteFeature { row: r, column },
                    other => other,
                })
            })
            .collect()
    }

    pub fn predict(&self, row: &[f64]) -> Result<bool> {
        Ok(self.predict_proba(row)? >= self.threshold)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(s)?;
        if model.format != MODEL_FORMAT {
            return Err(Error::ModelFormat(format!("unexpected format `{}`", model.format)));
        }
        if model.version != MODEL_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported model version {}",
                model.version
            )));
        }
        if model.feature_names.len() != model.feature_kinds.len() {
            return Err(Error::ModelFormat("feature names and kinds differ in length".into()));
        }
        for tree in &model.trees {
            validate_tree(tree, model.feature_names.len())?;
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

fn validate_tree(tree: &Tree, n_features: usize) -> Result<()> {
    if tree.nodes.is_empty() {
        return Err(Error::ModelFormat("empty tree".into()));
    }
    for (i, node) in tree.nodes.iter().enumerate() {
        match node {
            Node::Leaf { value } if !value.is_finite() => {
                return Err(Error::ModelFormat(format!("non-finite leaf at node {i}")));
            }
            // Children always follow their parent in the arena, which also rules out cycles.
            Node::Split {
                feature, left, right, ..
            } if *feature >= n_features
                || *left <= i
                || *right <= i
                || *left >= tree.nodes.len()
                || *right >= tree.nodes.len() =>
            {
                return Err(Error::ModelFormat(format!("malformed split at node {i}")));
            }
            _ => {}
        }
    }
    Ok(())
}
