//! Gradient boosted regression trees with squared-error loss, second-order
//! split gains, L1/L2 leaf regularization and row/column subsampling.

mod model_json;
mod split;
mod train;

pub use model_json::{load_model, save_model, ModelError, MODEL_FORMAT_VERSION};
pub use split::{best_split, SplitCandidate};
pub use train::{build_tree, train, train_forest, train_traced};

use alloc::string::String;
use alloc::vec::Vec;

/// One tree node. Nodes are addressed by their index in [`Tree::nodes`];
/// index 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Rows with `x[feature] < threshold` go left, the rest go right.
    Split { feature: usize, threshold: f64, left: usize, right: usize, cover: f64 },
    Leaf { weight: f64, cover: f64 },
}

impl Node {
    pub fn cover(&self) -> f64 {
        match self {
            Node::Split { cover, .. } | Node::Leaf { cover, .. } => *cover,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Leaf weight reached by `x`.
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if x[*feature] < *threshold { *left } else { *right };
                }
                Node::Leaf { weight, .. } => return *weight,
            }
        }
    }

    /// Longest root-to-leaf path measured in split edges.
    pub fn max_depth(&self) -> usize {
        fn depth(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + depth(nodes, *left).max(depth(nodes, *right))
                }
            }
        }
        depth(&self.nodes, 0)
    }
}

/// Trained additive model: `base_score` plus the sum of tree outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub base_score: f64,
    pub feature_names: Vec<String>,
    pub trees: Vec<Tree>,
}

impl Ensemble {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Prediction for one row. The row length must match the model and all
    /// entries must be finite.
    pub fn predict_row(&self, x: &[f64]) -> Result<f64, GbtError> {
        if x.len() != self.n_features() {
            return Err(GbtError::DimensionMismatch {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(GbtError::NonFinite(String::from("feature row")));
        }
        let mut out = self.base_score;
        for tree in &self.trees {
            out += tree.predict_row(x);
        }
        Ok(out)
    }

    /// Predictions for a column-major matrix.
    pub fn predict_columns(&self, columns: &[Vec<f64>]) -> Result<Vec<f64>, GbtError> {
        if columns.len() != self.n_features() {
            return Err(GbtError::DimensionMismatch {
                expected: self.n_features(),
                got: columns.len(),
            });
        }
        let n = columns.first().map_or(0, |c| c.len());
        let mut row = Vec::with_capacity(columns.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            row.clear();
            row.extend(columns.iter().map(|c| c[i]));
            out.push(self.predict_row(&row)?);
        }
        Ok(out)
    }

    pub fn predict_dataset(&self, data: &crate::signal::Dataset) -> Result<Vec<f64>, GbtError> {
        self.predict_columns(data.columns())
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Split levels per tree; 0 means every tree is a single leaf.
    pub max_depth: usize,
    pub learning_rate: f64,
    pub n_estimators: usize,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// L1 penalty on leaf weights (soft threshold on the gradient sum).
    pub alpha: f64,
    /// Minimum split gain.
    pub gamma: f64,
    /// Row fraction drawn per tree (without replacement).
    pub subsample: f64,
    /// Feature fraction drawn per tree.
    pub colsample: f64,
    /// Minimum hessian sum in each child.
    pub min_child_weight: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_depth: 10,
            learning_rate: 0.1,
            n_estimators: 150,
            lambda: 1.0,
            alpha: 1.0,
            gamma: 0.0,
            subsample: 0.9,
            colsample: 0.9,
            min_child_weight: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), GbtError> {
        let fail = |msg: &str| Err(GbtError::InvalidConfig(String::from(msg)));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0 && self.learning_rate <= 1.0)
        {
            return fail("learning_rate must lie in (0, 1]");
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return fail("lambda must be non-negative");
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return fail("alpha must be non-negative");
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return fail("gamma must be non-negative");
        }
        if !(self.subsample.is_finite() && self.subsample > 0.0 && self.subsample <= 1.0) {
            return fail("subsample must lie in (0, 1]");
        }
        if !(self.colsample.is_finite() && self.colsample > 0.0 && self.colsample <= 1.0) {
            return fail("colsample must lie in (0, 1]");
        }
        if !(self.min_child_weight.is_finite() && self.min_child_weight >= 0.0) {
            return fail("min_child_weight must be non-negative");
        }
        if self.max_depth > 32 {
            return fail("max_depth above 32 is not supported");
        }
        Ok(())
    }
}

/// First and second derivatives of the squared-error loss, per row.
#[derive(Debug, Clone, PartialEq)]
pub struct GradHess {
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

/// Gradients for 0.5 * (y - yhat)^2: g = yhat - y, h = 1.
pub fn compute_grad_hess(y: &[f64], yhat: &[f64]) -> Result<GradHess, GbtError> {
    if y.len() != yhat.len() {
        return Err(GbtError::LengthMismatch { left: y.len(), right: yhat.len() });
    }
    let g = y.iter().zip(yhat).map(|(yi, pi)| pi - yi).collect();
    let h = alloc::vec![1.0; y.len()];
    Ok(GradHess { g, h })
}

/// Regularized leaf weight: `-eta * sign(G) * max(|G| - alpha, 0) / (H + lambda)`.
pub fn leaf_weight(g_sum: f64, h_sum: f64, lambda: f64, alpha: f64, eta: f64) -> f64 {
    let soft = if g_sum > alpha {
        g_sum - alpha
    } else if g_sum < -alpha {
        g_sum + alpha
    } else {
        0.0
    };
    -eta * soft / (h_sum + lambda)
}

#[derive(Debug, Clone, PartialEq)]
pub enum GbtError {
    InvalidConfig(String),
    /// Training needs at least two rows.
    TooFewRows { n: usize },
    NoFeatures,
    LengthMismatch { left: usize, right: usize },
    NonFinite(String),
    DimensionMismatch { expected: usize, got: usize },
}

impl core::fmt::Display for GbtError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GbtError::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            GbtError::TooFewRows { n } => write!(f, "need at least 2 rows, got {n}"),
            GbtError::NoFeatures => write!(f, "need at least one feature column"),
            GbtError::LengthMismatch { left, right } => {
                write!(f, "length mismatch: {left} vs {right}")
            }
            GbtError::NonFinite(what) => write!(f, "non-finite values in {what}"),
            GbtError::DimensionMismatch { expected, got } => {
                write!(f, "expected {expected} features, got {got}")
            }
        }
    }
}

impl core::error::Error for GbtError {}
