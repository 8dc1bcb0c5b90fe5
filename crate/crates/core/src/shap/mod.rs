//! Shapley attributions for tree ensembles, plus the global-importance,
//! dependence and force-layout summaries built on them.

mod tree;

pub use tree::tree_shap;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::gbt::{Ensemble, GbtError, Node};
use crate::math;

/// Brute-force enumeration cap: 2^m subsets.
pub const BRUTEFORCE_MAX_FEATURES: usize = 20;

/// Per-row attribution: `base_value + phi.sum() == prediction`.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    /// Position in the originating dataset, when the caller tracks one.
    pub row_index: Option<usize>,
    pub base_value: f64,
    pub phi: Vec<f64>,
    pub prediction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceEntry {
    pub feature_index: usize,
    pub feature_name: String,
    /// Sum of |phi| over all explained rows.
    pub global_impact: f64,
}

/// Features sorted by global impact, descending; ties keep the lower index.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceRanking {
    pub entries: Vec<ImportanceEntry>,
}

impl ImportanceRanking {
    /// Feature indices in ranked order.
    pub fn order(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.feature_index).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DependencePoint {
    pub feature_value: f64,
    pub shap_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedMean {
    pub bin_center: f64,
    pub mean_shap: f64,
}

/// Scatter of (feature value, phi) between the 2.5th and 97.5th percentile,
/// with equal-width bin means over the same span.
#[derive(Debug, Clone, PartialEq)]
pub struct DependenceData {
    pub feature_name: String,
    pub points: Vec<DependencePoint>,
    pub binned_means: Vec<BinnedMean>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceItem {
    pub feature: String,
    pub value: f64,
    pub phi: f64,
}

/// One row's explanation arranged for a force-style rendering: positive
/// pushes and negative pushes, each strongest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceRecord {
    pub base: f64,
    pub prediction: f64,
    pub positive: Vec<ForceItem>,
    pub negative: Vec<ForceItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShapError {
    /// An internal node routes no training weight; the model file is broken.
    ZeroCover { tree: usize, node: usize },
    TooManyFeatures { m: usize, limit: usize },
    Model(GbtError),
    EmptyInput(&'static str),
    InvalidParameter(String),
}

impl core::fmt::Display for ShapError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ShapError::ZeroCover { tree, node } => {
                write!(f, "zero cover at internal node {node} of tree {tree}")
            }
            ShapError::TooManyFeatures { m, limit } => write!(
                f,
                "{m} features exceeds the {limit}-feature brute-force cap; use tree_shap"
            ),
            ShapError::Model(e) => write!(f, "{e}"),
            ShapError::EmptyInput(what) => write!(f, "empty input: {what}"),
            ShapError::InvalidParameter(msg) => write!(f, "{msg}"),
        }
    }
}

impl core::error::Error for ShapError {}

impl From<GbtError> for ShapError {
    fn from(e: GbtError) -> Self {
        ShapError::Model(e)
    }
}

/// Path-dependent conditional expectation E[f(x) | x_S]: at a split on a
/// feature in `subset` follow x's branch, otherwise average both children by
/// cover.
pub fn cond_expectation(model: &Ensemble, x: &[f64], subset: &[bool]) -> Result<f64, ShapError> {
    let m = model.n_features();
    if x.len() != m || subset.len() != m {
        return Err(ShapError::Model(GbtError::DimensionMismatch {
            expected: m,
            got: if x.len() != m { x.len() } else { subset.len() },
        }));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ShapError::Model(GbtError::NonFinite(String::from("feature row"))));
    }
    let mut total = model.base_score;
    for (t, tree) in model.trees.iter().enumerate() {
        total += expect_node(&tree.nodes, t, 0, x, subset)?;
    }
    Ok(total)
}

fn expect_node(
    nodes: &[Node],
    tree_index: usize,
    i: usize,
    x: &[f64],
    subset: &[bool],
) -> Result<f64, ShapError> {
    match nodes[i] {
        Node::Leaf { weight, .. } => Ok(weight),
        Node::Split { feature, threshold, left, right, .. } => {
            if subset[feature] {
                let next = if x[feature] < threshold { left } else { right };
                expect_node(nodes, tree_index, next, x, subset)
            } else {
                let cl = nodes[left].cover();
                let cr = nodes[right].cover();
                let total = cl + cr;
                if !(total > 0.0) {
                    return Err(ShapError::ZeroCover { tree: tree_index, node: i });
                }
                let el = expect_node(nodes, tree_index, left, x, subset)?;
                let er = expect_node(nodes, tree_index, right, x, subset)?;
                Ok((cl * el + cr * er) / total)
            }
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut row = vec![0.0f64; k + 1];
    row[0] = 1.0;
    for _ in 0..n {
        for j in (1..=k).rev() {
            row[j] += row[j - 1];
        }
    }
    row[k]
}

/// Shapley values by direct subset enumeration; exponential in m, capped at
/// [`BRUTEFORCE_MAX_FEATURES`].
pub fn shapley_bruteforce(model: &Ensemble, x: &[f64]) -> Result<Explanation, ShapError> {
    let m = model.n_features();
    if m > BRUTEFORCE_MAX_FEATURES {
        return Err(ShapError::TooManyFeatures { m, limit: BRUTEFORCE_MAX_FEATURES });
    }
    let prediction = model.predict_row(x)?;
    let n_masks = 1usize << m;
    let mut value = Vec::with_capacity(n_masks);
    let mut subset = vec![false; m];
    for mask in 0..n_masks {
        for (j, s) in subset.iter_mut().enumerate() {
            *s = mask & (1 << j) != 0;
        }
        value.push(cond_expectation(model, x, &subset)?);
    }
    // weight for |S| = s: s!(m-s-1)!/m! = 1 / (m * C(m-1, s))
    let weights: Vec<f64> =
        (0..m).map(|s| 1.0 / (m as f64 * binomial(m - 1, s))).collect();
    let mut phi = vec![0.0; m];
    for (j, p) in phi.iter_mut().enumerate() {
        let bit = 1usize << j;
        for mask in 0..n_masks {
            if mask & bit == 0 {
                let s = mask.count_ones() as usize;
                *p += weights[s] * (value[mask | bit] - value[mask]);
            }
        }
    }
    Ok(Explanation { row_index: None, base_value: value[0], phi, prediction })
}

/// Global impact Σ|phi| per feature, sorted descending; ties keep the lower
/// feature index.
pub fn importance(
    explanations: &[Explanation],
    feature_names: &[String],
) -> Result<ImportanceRanking, ShapError> {
    if explanations.is_empty() {
        return Err(ShapError::EmptyInput("explanation list"));
    }
    let m = feature_names.len();
    let mut impact = vec![0.0f64; m];
    for e in explanations {
        if e.phi.len() != m {
            return Err(ShapError::Model(GbtError::DimensionMismatch {
                expected: m,
                got: e.phi.len(),
            }));
        }
        for (acc, p) in impact.iter_mut().zip(&e.phi) {
            *acc += math::abs(*p);
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| impact[b].total_cmp(&impact[a]).then(a.cmp(&b)));
    let entries = order
        .into_iter()
        .map(|j| ImportanceEntry {
            feature_index: j,
            feature_name: feature_names[j].clone(),
            global_impact: impact[j],
        })
        .collect();
    Ok(ImportanceRanking { entries })
}

/// Dependence view for one feature: per-row (value, phi) scatter restricted
/// to the central 95% of the feature's distribution, plus equal-width bin
/// means. `values` must align row-for-row with `explanations`.
pub fn dependence(
    explanations: &[Explanation],
    values: &[f64],
    feature: usize,
    feature_name: &str,
    bins: usize,
) -> Result<DependenceData, ShapError> {
    if explanations.is_empty() {
        return Err(ShapError::EmptyInput("explanation list"));
    }
    if values.len() != explanations.len() {
        return Err(ShapError::InvalidParameter(alloc::format!(
            "{} feature values for {} explanations",
            values.len(),
            explanations.len()
        )));
    }
    if bins < 2 {
        return Err(ShapError::InvalidParameter(String::from("bins must be at least 2")));
    }
    for e in explanations {
        if feature >= e.phi.len() {
            return Err(ShapError::InvalidParameter(alloc::format!(
                "feature {feature} out of range for {} attributions",
                e.phi.len()
            )));
        }
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = math::percentile(&sorted, 0.025);
    let hi = math::percentile(&sorted, 0.975);
    let points: Vec<DependencePoint> = values
        .iter()
        .zip(explanations)
        .filter(|(v, _)| **v >= lo && **v <= hi)
        .map(|(v, e)| DependencePoint { feature_value: *v, shap_value: e.phi[feature] })
        .collect();
    if points.is_empty() {
        return Err(ShapError::EmptyInput("dependence points after percentile trim"));
    }
    if hi <= lo {
        // constant central mass: a single bin carries everything
        let mean = math::mean(&points.iter().map(|p| p.shap_value).collect::<Vec<_>>());
        return Ok(DependenceData {
            feature_name: String::from(feature_name),
            points,
            binned_means: vec![BinnedMean { bin_center: lo, mean_shap: mean }],
            note: Some(String::from("feature is constant over the trimmed range")),
        });
    }
    let width = (hi - lo) / bins as f64;
    let mut sums = vec![0.0f64; bins];
    let mut counts = vec![0usize; bins];
    for p in &points {
        let mut b = ((p.feature_value - lo) / width) as usize;
        if b >= bins {
            b = bins - 1; // the upper edge belongs to the last bin
        }
        sums[b] += p.shap_value;
        counts[b] += 1;
    }
    let binned_means = (0..bins)
        .filter(|&b| counts[b] > 0)
        .map(|b| BinnedMean {
            bin_center: lo + (b as f64 + 0.5) * width,
            mean_shap: sums[b] / counts[b] as f64,
        })
        .collect();
    Ok(DependenceData {
        feature_name: String::from(feature_name),
        points,
        binned_means,
        note: None,
    })
}

/// One row's attribution split into positive and negative pushes, strongest
/// first; zero-phi features are omitted.
pub fn explain_instance(model: &Ensemble, x: &[f64]) -> Result<ForceRecord, ShapError> {
    let e = tree_shap(model, x)?;
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    for (j, &phi) in e.phi.iter().enumerate() {
        let item = ForceItem {
            feature: model.feature_names[j].clone(),
            value: x[j],
            phi,
        };
        if phi > 0.0 {
            positive.push(item);
        } else if phi < 0.0 {
            negative.push(item);
        }
    }
    let by_magnitude = |a: &ForceItem, b: &ForceItem| math::abs(b.phi).total_cmp(&math::abs(a.phi));
    positive.sort_by(by_magnitude);
    negative.sort_by(by_magnitude);
    Ok(ForceRecord { base: e.base_value, prediction: e.prediction, positive, negative })
}
