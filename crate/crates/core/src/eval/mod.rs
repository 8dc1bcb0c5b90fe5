//! Regression metrics, seeded k-fold cross-validation with out-of-fold
//! attributions, the forward feature-addition curve, and reference baselines.

mod baselines;
mod kfold;

pub use baselines::{ols_baseline, ols_fit, tree_baselines, TreeBaselines};
pub use kfold::{forward_feature_curve, kfold_cv, kfold_partition, CurvePoint};

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::gbt::GbtError;
use crate::math;
use crate::shap::{Explanation, ShapError};

/// Which R² definition a report uses. `Paper` is explained-variance
/// SS_regression/SS_total (deviations of ŷ around the true-y mean); it can
/// exceed 1 for biased predictors. `Standard` is 1 - SS_residual/SS_total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum R2Convention {
    #[default]
    Paper,
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse: f64,
    pub mae: f64,
    /// `None` when the target had no variance in this slice.
    pub r2: Option<f64>,
    /// `None` unless n > m + 1 and r2 is defined.
    pub adj_r2: Option<f64>,
    pub n: usize,
    pub m: usize,
}

/// All four statistics for predictions `yhat` of a model with `m` features.
/// Errors on a constant target; use [`fold_metrics`] where degenerate slices
/// are expected.
pub fn metrics(
    y: &[f64],
    yhat: &[f64],
    m: usize,
    convention: R2Convention,
) -> Result<Metrics, EvalError> {
    let out = fold_metrics(y, yhat, m, convention)?;
    if out.r2.is_none() {
        return Err(EvalError::ConstantTarget);
    }
    Ok(out)
}

/// Like [`metrics`], but a variance-free target yields `r2 = None` instead
/// of an error, which single-row CV folds need.
pub fn fold_metrics(
    y: &[f64],
    yhat: &[f64],
    m: usize,
    convention: R2Convention,
) -> Result<Metrics, EvalError> {
    if y.len() != yhat.len() {
        return Err(EvalError::LengthMismatch { left: y.len(), right: yhat.len() });
    }
    if y.is_empty() {
        return Err(EvalError::EmptyInput("metrics target"));
    }
    if y.iter().chain(yhat).any(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite("metrics input"));
    }
    let n = y.len();
    let nf = n as f64;
    let mut ss_res = 0.0;
    let mut abs_sum = 0.0;
    for (a, p) in y.iter().zip(yhat) {
        let d = a - p;
        ss_res += d * d;
        abs_sum += math::abs(d);
    }
    let rmse = math::sqrt(ss_res / nf);
    let mae = abs_sum / nf;
    let y_mean = math::mean(y);
    let mut ss_tot = 0.0;
    let mut ss_reg = 0.0;
    for (a, p) in y.iter().zip(yhat) {
        ss_tot += (a - y_mean) * (a - y_mean);
        ss_reg += (p - y_mean) * (p - y_mean);
    }
    let r2 = if ss_tot > 0.0 {
        Some(match convention {
            R2Convention::Paper => ss_reg / ss_tot,
            R2Convention::Standard => 1.0 - ss_res / ss_tot,
        })
    } else {
        None
    };
    let adj_r2 = match r2 {
        Some(r2) if n > m + 1 => {
            Some(1.0 - (1.0 - r2) * (nf - 1.0) / (nf - m as f64 - 1.0))
        }
        _ => None,
    };
    Ok(Metrics { rmse, mae, r2, adj_r2, n, m })
}

/// How rows are distributed over CV folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FoldGrouping {
    /// Row-level uniform random partition.
    #[default]
    Rows,
    /// Whole subjects assigned to folds; needs subject labels.
    Subject,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOptions {
    pub k: usize,
    pub seed: u64,
    pub grouping: FoldGrouping,
    pub convention: R2Convention,
    /// Compute out-of-fold SHAP attributions for every row.
    pub explain: bool,
    /// Keep the k fold models in the outcome.
    pub keep_models: bool,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            k: 10,
            seed: 0,
            grouping: FoldGrouping::Rows,
            convention: R2Convention::Paper,
            explain: true,
            keep_models: false,
        }
    }
}

/// Summary exported to JSON: per-fold and pooled metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Metrics>,
    /// Metrics over the concatenated out-of-fold predictions.
    pub pooled: Metrics,
    #[serde(skip_serializing)]
    pub fold_of_row: Vec<usize>,
}

/// Everything kfold_cv produces: the report plus per-row artifacts.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub report: CvReport,
    /// One prediction per dataset row, from the fold that held it out.
    pub oof_predictions: Vec<f64>,
    /// One explanation per row (empty when `explain` is off); `row_index`
    /// is set and each row appears exactly once.
    pub explanations: Vec<Explanation>,
    /// Fold models in fold order (empty unless `keep_models`).
    pub models: Vec<crate::gbt::Ensemble>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    LengthMismatch { left: usize, right: usize },
    EmptyInput(&'static str),
    NonFinite(&'static str),
    /// The target has no variance, so R² is undefined.
    ConstantTarget,
    InvalidParameter(String),
    /// A fold would train on fewer than two rows.
    TooFewTrainRows { fold: usize, rows: usize },
    /// Subject grouping asked for, but the dataset has no subject labels.
    MissingSubjects,
    Model(GbtError),
    Shap(ShapError),
}

impl core::fmt::Display for EvalError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EvalError::LengthMismatch { left, right } => {
                write!(f, "length mismatch: {left} vs {right}")
            }
            EvalError::EmptyInput(what) => write!(f, "empty input: {what}"),
            EvalError::NonFinite(what) => write!(f, "non-finite values in {what}"),
            EvalError::ConstantTarget => {
                write!(f, "target has no variance; R\u{b2} is undefined")
            }
            EvalError::InvalidParameter(msg) => write!(f, "{msg}"),
            EvalError::TooFewTrainRows { fold, rows } => {
                write!(f, "fold {fold} would train on only {rows} row(s)")
            }
            EvalError::MissingSubjects => {
                write!(f, "subject-grouped folds need subject labels")
            }
            EvalError::Model(e) => write!(f, "{e}"),
            EvalError::Shap(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for EvalError {}

impl From<GbtError> for EvalError {
    fn from(e: GbtError) -> Self {
        EvalError::Model(e)
    }
}

impl From<ShapError> for EvalError {
    fn from(e: ShapError) -> Self {
        EvalError::Shap(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn perfect_fit_scores_ones() {
        let y = [1.0, 4.0, 2.0, 8.0];
        let m = metrics(&y, &y, 2, R2Convention::Paper).unwrap();
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.mae, 0.0);
        assert_abs_diff_eq!(m.r2.unwrap(), 1.0);
        assert_abs_diff_eq!(m.adj_r2.unwrap(), 1.0);
        let m = metrics(&y, &y, 2, R2Convention::Standard).unwrap();
        assert_abs_diff_eq!(m.r2.unwrap(), 1.0);
    }

    #[test]
    fn flat_prediction_example() {
        // ŷ carries no variance around the mean of y, so paper-R² is 0.
        let m = metrics(&[0.0, 2.0], &[1.0, 1.0], 1, R2Convention::Paper).unwrap();
        assert_eq!(m.rmse, 1.0);
        assert_eq!(m.mae, 1.0);
        assert_eq!(m.r2, Some(0.0));
        // n = 2, m = 1: adjusted R² needs n > m + 1
        assert_eq!(m.adj_r2, None);
    }

    #[test]
    fn paper_r2_can_exceed_one() {
        // over-dispersed predictions: SS_reg > SS_tot
        let y = [0.0, 1.0, 2.0];
        let yhat = [-1.0, 1.0, 3.0];
        let m = metrics(&y, &yhat, 1, R2Convention::Paper).unwrap();
        assert!(m.r2.unwrap() > 1.0);
        let s = metrics(&y, &yhat, 1, R2Convention::Standard).unwrap();
        assert!(s.r2.unwrap() < 1.0);
    }

    #[test]
    fn constant_target_is_an_error_only_in_strict_mode() {
        let y = [3.0, 3.0, 3.0];
        let yhat = [1.0, 2.0, 3.0];
        assert!(matches!(
            metrics(&y, &yhat, 1, R2Convention::Paper),
            Err(EvalError::ConstantTarget)
        ));
        let lenient = fold_metrics(&y, &yhat, 1, R2Convention::Paper).unwrap();
        assert_eq!(lenient.r2, None);
        assert_eq!(lenient.adj_r2, None);
        assert!(lenient.rmse > 0.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            metrics(&[1.0], &[1.0, 2.0], 0, R2Convention::Paper),
            Err(EvalError::LengthMismatch { .. })
        ));
        assert!(matches!(
            metrics(&[1.0, f64::NAN], &[1.0, 2.0], 0, R2Convention::Paper),
            Err(EvalError::NonFinite(_))
        ));
    }

    proptest! {
        #[test]
        fn rmse_dominates_mae(
            y in proptest::collection::vec(-100.0f64..100.0, 3..40),
            shift in proptest::collection::vec(-10.0f64..10.0, 40),
        ) {
            let yhat: alloc::vec::Vec<f64> =
                y.iter().zip(&shift).map(|(a, s)| a + s).collect();
            if let Ok(m) = fold_metrics(&y, &yhat, 2, R2Convention::Paper) {
                prop_assert!(m.rmse >= m.mae - 1e-12);
                prop_assert!(m.mae >= 0.0);
            }
        }

        #[test]
        fn adjusted_r2_formula_checks_out(
            r2 in -2.0f64..0.999,
            n in 5usize..500,
            m in 1usize..3,
        ) {
            // direct Eq. evaluation on synthetic (r2, n, m) triples
            let direct = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - m as f64 - 1.0);
            // reconstruct via the metrics path: build data with that r2 is
            // awkward, so check the algebraic invariant instead
            prop_assert!(direct < r2 + 1e-12);
        }
    }

    #[test]
    fn adj_r2_matches_direct_evaluation_on_random_triples() {
        let mut rng = crate::rng::SplitMix64::new(88);
        for _ in 0..100 {
            let n = 10 + rng.next_below(400);
            let y: alloc::vec::Vec<f64> = (0..n).map(|_| rng.next_f64() * 50.0).collect();
            let yhat: alloc::vec::Vec<f64> =
                y.iter().map(|v| v + rng.next_normal()).collect();
            let m_feats = 1 + rng.next_below(8);
            let got = metrics(&y, &yhat, m_feats, R2Convention::Paper).unwrap();
            let r2 = got.r2.unwrap();
            let want =
                1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - m_feats as f64 - 1.0);
            assert!((got.adj_r2.unwrap() - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn both_conventions_match_direct_summation() {
        let mut rng = crate::rng::SplitMix64::new(4);
        let n = 64;
        let y: vec::Vec<f64> = (0..n).map(|_| rng.next_f64() * 10.0).collect();
        let yhat: vec::Vec<f64> = (0..n).map(|_| rng.next_f64() * 10.0).collect();
        let ybar: f64 = y.iter().sum::<f64>() / n as f64;
        let ss_tot: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
        let ss_reg: f64 = yhat.iter().map(|v| (v - ybar) * (v - ybar)).sum();
        let ss_res: f64 = y.iter().zip(&yhat).map(|(a, b)| (a - b) * (a - b)).sum();
        let paper = metrics(&y, &yhat, 3, R2Convention::Paper).unwrap();
        let std_m = metrics(&y, &yhat, 3, R2Convention::Standard).unwrap();
        assert_abs_diff_eq!(paper.r2.unwrap(), ss_reg / ss_tot, epsilon = 1e-12);
        assert_abs_diff_eq!(std_m.r2.unwrap(), 1.0 - ss_res / ss_tot, epsilon = 1e-12);
    }
}
