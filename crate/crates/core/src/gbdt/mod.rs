//! Deterministic histogram gradient boosting with second-order (Newton)
//! leaf values, accepting any loss from [`crate::loss`].
//!
//! Training is exactly reproducible: quantile binning, greedy best-first
//! leaf growth ordered by gain with fixed tie-breaking, and no row or
//! feature subsampling. Boosting starts from a zero raw score, the same
//! convention custom-objective boosters use; with a shifted loss this is
//! what lets the shift steer early rounds toward the minority class.

mod binning;
mod grow;
mod text;

pub use binning::{BinEdges, BinnedData};
pub use text::ModelParseError;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dataset::Dataset;
use crate::loss::{LossError, LossKind, LossSpec};

/// Boosting hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostConfig {
    pub num_rounds: usize,
    pub learning_rate: f64,
    pub max_leaves: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub l2_lambda: f64,
    pub max_bins: usize,
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            num_rounds: 200,
            learning_rate: 0.1,
            max_leaves: 31,
            max_depth: 6,
            min_samples_leaf: 20,
            l2_lambda: 1.0,
            max_bins: 256,
            seed: 0,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.num_rounds < 1 {
            return Err(TrainError::BadConfig("num_rounds must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(TrainError::BadConfig("learning_rate must be in (0, 1]"));
        }
        if self.max_leaves < 2 {
            return Err(TrainError::BadConfig("max_leaves must be >= 2"));
        }
        if self.max_depth < 1 {
            return Err(TrainError::BadConfig("max_depth must be >= 1"));
        }
        if self.min_samples_leaf < 1 {
            return Err(TrainError::BadConfig("min_samples_leaf must be >= 1"));
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return Err(TrainError::BadConfig("l2_lambda must be finite and >= 0"));
        }
        if !(2..=256).contains(&self.max_bins) {
            return Err(TrainError::BadConfig("max_bins must lie in [2, 256]"));
        }
        Ok(())
    }
}

/// One node of a regression tree. Split nodes send `bin <= threshold`
/// (and missing values) to the left child.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split { feature: u32, threshold: u16, left: u32, right: u32 },
    Leaf { value: f64 },
}

/// A regression tree stored as a pre-order node list, root at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Raw-score increment for one feature row.
    pub fn predict_row(&self, edges: &BinEdges, row: &[f64]) -> f64 {
        let mut idx = 0usize;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    let f = *feature as usize;
                    let bin = edges.bin_value(f, row[f]);
                    let go_left = bin == edges.missing_bin(f) || bin <= *threshold;
                    idx = if go_left { *left } else { *right } as usize;
                }
            }
        }
    }
}

/// A trained boosted ensemble: ordered trees over fixed bin edges, plus the
/// loss it was trained with (which fixes the probability activation).
#[derive(Debug, Clone, PartialEq)]
pub struct BoostedModel {
    base_score: f64,
    trees: Vec<Tree>,
    bin_edges: BinEdges,
    loss_spec: LossSpec,
    feature_names: Vec<String>,
}

impl BoostedModel {
    pub fn base_score(&self) -> f64 {
        self.base_score
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn bin_edges(&self) -> &BinEdges {
        &self.bin_edges
    }

    pub fn loss_spec(&self) -> &LossSpec {
        &self.loss_spec
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Accumulated raw scores, one per row.
    pub fn predict_raw(
        &self,
        features: &crate::dataset::FeatureMatrix,
    ) -> Result<Vec<f64>, PredictError> {
        if features.n_cols() != self.feature_names.len() {
            return Err(PredictError::DimensionMismatch {
                expected: self.feature_names.len(),
                got: features.n_cols(),
            });
        }
        let mut out = Vec::with_capacity(features.n_rows());
        for r in 0..features.n_rows() {
            let row = features.row(r);
            let mut z = self.base_score;
            for tree in &self.trees {
                z += tree.predict_row(&self.bin_edges, row);
            }
            out.push(z);
        }
        Ok(out)
    }

    /// Probabilities under the activation recorded at training time:
    /// plain sigmoid for cross-entropy/focal, the shifted sigmoid with the
    /// training-time `g` for the shifted loss.
    pub fn predict_proba(
        &self,
        features: &crate::dataset::FeatureMatrix,
    ) -> Result<Vec<f64>, PredictError> {
        let g = self
            .loss_spec
            .shift()
            .expect("loss spec was validated at training time");
        let mut out = self.predict_raw(features)?;
        for z in &mut out {
            *z = crate::activation::asig(*z, g);
        }
        Ok(out)
    }

    /// Canonical text document for this model; see `from_text`.
    pub fn to_text(&self) -> String {
        text::to_text(self)
    }

    /// Parse a model document. Round-trips byte-exactly with `to_text`.
    pub fn from_text(doc: &str) -> Result<BoostedModel, ModelParseError> {
        text::from_text(doc)
    }

    pub(crate) fn from_parts(
        base_score: f64,
        trees: Vec<Tree>,
        bin_edges: BinEdges,
        loss_spec: LossSpec,
        feature_names: Vec<String>,
    ) -> BoostedModel {
        BoostedModel { base_score, trees, bin_edges, loss_spec, feature_names }
    }
}

/// Train a boosted model on `train_data` under the given loss.
///
/// For the shifted loss the spec's imbalance ratio must match the training
/// data's achieved ratio to within 0.5; a mismatch means the caller wired a
/// spec from one resampling into another.
pub fn train(
    train_data: &Dataset,
    config: &BoostConfig,
    spec: &LossSpec,
) -> Result<BoostedModel, TrainError> {
    config.validate()?;
    spec.validate().map_err(TrainError::Loss)?;
    let positives = train_data.positives();
    let negatives = train_data.negatives();
    if positives == 0 || negatives == 0 {
        return Err(TrainError::SingleClass { positives, negatives });
    }
    for (i, &v) in train_data.features().values().iter().enumerate() {
        if !v.is_finite() {
            let cols = train_data.features().n_cols();
            return Err(TrainError::NonFiniteFeature { row: i / cols, col: i % cols });
        }
    }
    if spec.kind() == LossKind::AsigFocal {
        let achieved = negatives as f64 / positives as f64;
        let declared = spec.ir().expect("validated asig spec has an ir").value();
        if (declared - achieved).abs() > 0.5 {
            return Err(TrainError::IrMismatch { declared, achieved });
        }
    }

    let bin_edges = BinEdges::build(train_data.features(), config.max_bins);
    let binned = BinnedData::new(&bin_edges, train_data.features());
    let n = train_data.n_rows();
    let labels = train_data.labels();

    let mut scores = vec![0.0f64; n];
    let mut grad = vec![0.0f64; n];
    let mut hess = vec![0.0f64; n];
    let mut trees: Vec<Tree> = Vec::new();
    for _ in 0..config.num_rounds {
        for i in 0..n {
            let gh = spec
                .loss_grad_hess(scores[i], labels[i])
                .map_err(TrainError::Loss)?;
            grad[i] = gh.grad;
            hess[i] = gh.hess;
        }
        let Some(grown) = grow::grow_tree(&binned, &grad, &hess, config) else {
            // No split clears the gain bar; later rounds would see the same
            // gradients, so stop here.
            break;
        };
        for (value, rows) in &grown.leaf_assignments {
            for &r in rows {
                scores[r as usize] += value;
            }
        }
        trees.push(grown.tree);
    }

    Ok(BoostedModel {
        base_score: 0.0,
        trees,
        bin_edges,
        loss_spec: spec.clone(),
        feature_names: train_data.feature_names().to_vec(),
    })
}

/// Total training loss of a score vector; exposed for loss-curve checks.
pub fn total_loss(spec: &LossSpec, scores: &[f64], labels: &[u8]) -> Result<f64, LossError> {
    let mut acc = 0.0;
    for (z, y) in scores.iter().zip(labels) {
        acc += spec.loss_value(*z, *y)?;
    }
    Ok(acc / scores.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    BadConfig(&'static str),
    Loss(LossError),
    SingleClass { positives: usize, negatives: usize },
    NonFiniteFeature { row: usize, col: usize },
    IrMismatch { declared: f64, achieved: f64 },
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::BadConfig(msg) => write!(f, "bad config: {msg}"),
            TrainError::Loss(e) => write!(f, "bad loss spec: {e}"),
            TrainError::SingleClass { positives, negatives } => write!(
                f,
                "training data must contain both classes ({positives} positives, {negatives} negatives)"
            ),
            TrainError::NonFiniteFeature { row, col } => {
                write!(f, "non-finite feature value at row {row}, column {col}")
            }
            TrainError::IrMismatch { declared, achieved } => write!(
                f,
                "loss spec declares imbalance ratio {declared} but training data achieves {achieved}"
            ),
        }
    }
}

impl core::error::Error for TrainError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredictError {
    DimensionMismatch { expected: usize, got: usize },
}

impl fmt::Display for PredictError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictError::DimensionMismatch { expected, got } => {
                write!(f, "model expects {expected} features, matrix has {got}")
            }
        }
    }
}

impl core::error::Error for PredictError {}
