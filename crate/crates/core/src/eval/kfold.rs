//! Seeded fold assignment, the cross-validation driver, and the forward
//! feature-addition curve.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::gbt::{train, TrainConfig};
use crate::math;
use crate::rng::{derive_seed, SplitMix64};
use crate::shap::tree_shap;
use crate::signal::Dataset;

use super::{
    fold_metrics, metrics, CvOptions, CvOutcome, CvReport, EvalError, FoldGrouping,
};

/// Fold label per row. Row grouping shuffles the rows and deals them out
/// round-robin; subject grouping deals whole subjects the same way, so no
/// subject ever straddles a fold boundary.
pub fn kfold_partition(
    data: &Dataset,
    k: usize,
    seed: u64,
    grouping: FoldGrouping,
) -> Result<Vec<usize>, EvalError> {
    let n = data.n();
    if k < 2 {
        return Err(EvalError::InvalidParameter(alloc::format!(
            "k must be at least 2, got {k}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    match grouping {
        FoldGrouping::Rows => {
            if k > n {
                return Err(EvalError::InvalidParameter(alloc::format!(
                    "k = {k} exceeds the {n} available rows"
                )));
            }
            let mut perm: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut perm);
            let mut fold_of_row = vec![0usize; n];
            for (i, &r) in perm.iter().enumerate() {
                fold_of_row[r] = i % k;
            }
            Ok(fold_of_row)
        }
        FoldGrouping::Subject => {
            let subjects = data.subjects().ok_or(EvalError::MissingSubjects)?;
            let mut order: Vec<&str> = Vec::new();
            for s in subjects {
                if !order.contains(&s.as_str()) {
                    order.push(s);
                }
            }
            if order.len() < k {
                return Err(EvalError::InvalidParameter(alloc::format!(
                    "k = {k} exceeds the {} distinct subjects",
                    order.len()
                )));
            }
            rng.shuffle(&mut order);
            let fold_of_subject: BTreeMap<&str, usize> =
                order.iter().enumerate().map(|(i, &s)| (s, i % k)).collect();
            Ok(subjects.iter().map(|s| fold_of_subject[s.as_str()]).collect())
        }
    }
}

/// k-fold cross-validation of the boosted model. Every row is predicted by
/// the one fold model that did not see it; fold `f` trains with seed
/// `derive_seed(opts.seed, f)`. With `opts.explain` each row also gets its
/// out-of-fold attribution, returned in row order.
pub fn kfold_cv(
    data: &Dataset,
    cfg: &TrainConfig,
    opts: &CvOptions,
) -> Result<CvOutcome, EvalError> {
    cfg.validate().map_err(EvalError::Model)?;
    let fold_of_row = kfold_partition(data, opts.k, opts.seed, opts.grouping)?;
    let n = data.n();
    let m = data.m();
    let mut oof = vec![f64::NAN; n];
    let mut folds = Vec::with_capacity(opts.k);
    let mut explanations = Vec::new();
    let mut models = Vec::new();
    let mut row_buf = Vec::with_capacity(m);
    for f in 0..opts.k {
        let test_rows: Vec<usize> = (0..n).filter(|&r| fold_of_row[r] == f).collect();
        let train_rows: Vec<usize> = (0..n).filter(|&r| fold_of_row[r] != f).collect();
        if train_rows.len() < 2 {
            return Err(EvalError::TooFewTrainRows { fold: f, rows: train_rows.len() });
        }
        debug_assert!(!test_rows.is_empty());
        let train_ds = data.select_rows(&train_rows);
        let test_ds = data.select_rows(&test_rows);
        let fold_cfg = TrainConfig { seed: derive_seed(opts.seed, f as u64), ..cfg.clone() };
        let model = train(&train_ds, &fold_cfg)?;
        let preds = model.predict_dataset(&test_ds)?;
        for (&r, &p) in test_rows.iter().zip(&preds) {
            oof[r] = p;
        }
        folds.push(fold_metrics(test_ds.y(), &preds, m, opts.convention)?);
        if opts.explain {
            for (i, &r) in test_rows.iter().enumerate() {
                test_ds.row_into(i, &mut row_buf);
                let mut e = tree_shap(&model, &row_buf)?;
                e.row_index = Some(r);
                explanations.push(e);
            }
        }
        if opts.keep_models {
            models.push(model);
        }
    }
    explanations.sort_by_key(|e| e.row_index);
    let pooled = metrics(data.y(), &oof, m, opts.convention)?;
    let report = CvReport { k: opts.k, seed: opts.seed, folds, pooled, fold_of_row };
    Ok(CvOutcome { report, oof_predictions: oof, explanations, models })
}

/// One point of the feature-addition curve: CV statistics for a model
/// restricted to the top `n_features` of a ranking. Means and (population)
/// standard deviations are taken across the k fold test sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n_features: usize,
    pub rmse_mean: f64,
    pub rmse_std: f64,
    pub mae_mean: f64,
    pub mae_std: f64,
    pub adjr2_mean: f64,
    pub adjr2_std: f64,
}

fn spread(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    (math::mean(values), math::pop_std(values))
}

/// Re-run cross-validation on growing feature prefixes of `ranking` (most
/// important first). The j selected features are used in ascending index
/// order, so the full prefix reproduces the unrestricted model exactly.
pub fn forward_feature_curve(
    data: &Dataset,
    cfg: &TrainConfig,
    opts: &CvOptions,
    ranking: &[usize],
) -> Result<Vec<CurvePoint>, EvalError> {
    let m = data.m();
    if ranking.is_empty() || ranking.len() > m {
        return Err(EvalError::InvalidParameter(alloc::format!(
            "feature ranking must list between 1 and {m} features"
        )));
    }
    let mut seen = vec![false; m];
    for &j in ranking {
        if j >= m || seen[j] {
            return Err(EvalError::InvalidParameter(alloc::format!(
                "feature ranking entry {j} is out of range or repeated"
            )));
        }
        seen[j] = true;
    }
    let inner_opts = CvOptions { explain: false, keep_models: false, ..opts.clone() };
    let mut points = Vec::with_capacity(ranking.len());
    for j in 1..=ranking.len() {
        let mut chosen: Vec<usize> = ranking[..j].to_vec();
        chosen.sort_unstable();
        let sub = data.select_features(&chosen);
        let outcome = kfold_cv(&sub, cfg, &inner_opts)?;
        let folds = &outcome.report.folds;
        let rmse: Vec<f64> = folds.iter().map(|f| f.rmse).collect();
        let mae: Vec<f64> = folds.iter().map(|f| f.mae).collect();
        let adj: Vec<f64> = folds.iter().filter_map(|f| f.adj_r2).collect();
        let (rmse_mean, rmse_std) = spread(&rmse);
        let (mae_mean, mae_std) = spread(&mae);
        let (adjr2_mean, adjr2_std) = spread(&adj);
        points.push(CurvePoint {
            n_features: j,
            rmse_mean,
            rmse_std,
            mae_mean,
            mae_std,
            adjr2_mean,
            adjr2_std,
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;
    use alloc::vec::Vec;

    fn toy_dataset(n: usize, m: usize, seed: u64, subjects_of: usize) -> Dataset {
        let mut rng = SplitMix64::new(seed);
        let columns: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.next_f64() * 10.0).collect())
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let mut v = 10.0 + 4.0 * columns[0][i];
                if m > 1 {
                    v += 2.0 * columns[1][i] + 0.3 * columns[0][i] * columns[1][i];
                }
                v + rng.next_normal()
            })
            .map(|v| v.clamp(0.0, 100.0))
            .collect();
        let timestamps: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let subjects = (subjects_of > 0).then(|| {
            (0..n)
                .map(|i| alloc::format!("s{:02}", i % subjects_of))
                .collect::<Vec<String>>()
        });
        let names = (0..m).map(|j| alloc::format!("f{j}")).collect();
        Dataset::new(names, columns, y, timestamps, subjects).unwrap()
    }

    fn quick_cfg() -> TrainConfig {
        TrainConfig { n_estimators: 12, max_depth: 3, ..TrainConfig::default() }
    }

    #[test]
    fn partition_is_balanced_and_deterministic() {
        let data = toy_dataset(103, 2, 7, 0);
        let f = kfold_partition(&data, 10, 42, FoldGrouping::Rows).unwrap();
        assert_eq!(f.len(), 103);
        let mut sizes = [0usize; 10];
        for &fold in &f {
            sizes[fold] += 1;
        }
        let (lo, hi) = (*sizes.iter().min().unwrap(), *sizes.iter().max().unwrap());
        assert!(hi - lo <= 1, "sizes {sizes:?}");
        let again = kfold_partition(&data, 10, 42, FoldGrouping::Rows).unwrap();
        assert_eq!(f, again);
        let other = kfold_partition(&data, 10, 43, FoldGrouping::Rows).unwrap();
        assert_ne!(f, other);
    }

    #[test]
    fn subject_partition_keeps_subjects_whole() {
        let data = toy_dataset(60, 2, 3, 6);
        let f = kfold_partition(&data, 3, 9, FoldGrouping::Subject).unwrap();
        let subjects = data.subjects().unwrap();
        let mut fold_of: BTreeMap<&str, usize> = BTreeMap::new();
        for (r, s) in subjects.iter().enumerate() {
            let entry = fold_of.entry(s.as_str()).or_insert(f[r]);
            assert_eq!(*entry, f[r], "subject {s} split across folds");
        }
        // six subjects over three folds: two subjects each
        let mut per_fold = [0usize; 3];
        for (_, &fold) in &fold_of {
            per_fold[fold] += 1;
        }
        assert_eq!(per_fold, [2, 2, 2]);
    }

    #[test]
    fn partition_rejects_bad_shapes() {
        let data = toy_dataset(20, 2, 3, 4);
        assert!(matches!(
            kfold_partition(&data, 1, 0, FoldGrouping::Rows),
            Err(EvalError::InvalidParameter(_))
        ));
        assert!(matches!(
            kfold_partition(&data, 21, 0, FoldGrouping::Rows),
            Err(EvalError::InvalidParameter(_))
        ));
        assert!(matches!(
            kfold_partition(&data, 5, 0, FoldGrouping::Subject),
            Err(EvalError::InvalidParameter(_))
        ));
        let unlabeled = toy_dataset(20, 2, 3, 0);
        assert!(matches!(
            kfold_partition(&unlabeled, 4, 0, FoldGrouping::Subject),
            Err(EvalError::MissingSubjects)
        ));
    }

    #[test]
    fn every_row_is_predicted_and_explained_once() {
        let data = toy_dataset(40, 3, 11, 0);
        let opts = CvOptions { k: 4, seed: 5, ..CvOptions::default() };
        let out = kfold_cv(&data, &quick_cfg(), &opts).unwrap();
        assert_eq!(out.oof_predictions.len(), 40);
        assert!(out.oof_predictions.iter().all(|p| p.is_finite()));
        assert_eq!(out.explanations.len(), 40);
        for (i, e) in out.explanations.iter().enumerate() {
            assert_eq!(e.row_index, Some(i));
            assert!((e.prediction - out.oof_predictions[i]).abs() <= 1e-12);
            let sum: f64 = e.base_value + e.phi.iter().sum::<f64>();
            assert!((sum - e.prediction).abs() <= 1e-6);
        }
        assert_eq!(out.report.folds.len(), 4);
        assert_eq!(out.report.pooled.n, 40);
        assert!(out.models.is_empty());
    }

    #[test]
    fn oof_predictions_come_from_the_holdout_model() {
        let data = toy_dataset(30, 2, 2, 0);
        let opts = CvOptions { k: 3, seed: 1, explain: false, keep_models: true, ..CvOptions::default() };
        let out = kfold_cv(&data, &quick_cfg(), &opts).unwrap();
        assert_eq!(out.models.len(), 3);
        for r in 0..data.n() {
            let fold = out.report.fold_of_row[r];
            let p = out.models[fold].predict_row(&data.row(r)).unwrap();
            assert_eq!(p, out.oof_predictions[r]);
        }
    }

    #[test]
    fn leave_one_out_works_and_degenerate_folds_are_tolerated() {
        let data = toy_dataset(8, 2, 4, 0);
        let opts = CvOptions { k: 8, seed: 0, ..CvOptions::default() };
        let out = kfold_cv(&data, &quick_cfg(), &opts).unwrap();
        // single-row test folds cannot carry an R²
        assert!(out.report.folds.iter().all(|f| f.r2.is_none()));
        assert!(out.report.pooled.r2.is_some());
        assert_eq!(out.explanations.len(), 8);
    }

    #[test]
    fn tiny_training_sides_are_rejected() {
        let data = toy_dataset(2, 1, 4, 0);
        let opts = CvOptions { k: 2, seed: 0, ..CvOptions::default() };
        assert!(matches!(
            kfold_cv(&data, &quick_cfg(), &opts),
            Err(EvalError::TooFewTrainRows { rows: 1, .. })
        ));
    }

    #[test]
    fn reruns_are_bit_identical() {
        let data = toy_dataset(50, 3, 8, 0);
        let opts = CvOptions { k: 5, seed: 77, explain: false, ..CvOptions::default() };
        let a = kfold_cv(&data, &quick_cfg(), &opts).unwrap();
        let b = kfold_cv(&data, &quick_cfg(), &opts).unwrap();
        assert_eq!(a.oof_predictions, b.oof_predictions);
        assert_eq!(a.report, b.report);
    }

    #[test]
    fn full_curve_prefix_matches_plain_cv() {
        let data = toy_dataset(45, 3, 21, 0);
        let opts = CvOptions { k: 5, seed: 3, explain: false, ..CvOptions::default() };
        let curve = forward_feature_curve(&data, &quick_cfg(), &opts, &[2, 0, 1]).unwrap();
        assert_eq!(curve.len(), 3);
        for w in curve.windows(2) {
            assert!(w[1].n_features == w[0].n_features + 1);
        }
        let full = kfold_cv(&data, &quick_cfg(), &opts).unwrap();
        let rmse: Vec<f64> = full.report.folds.iter().map(|f| f.rmse).collect();
        // the j = m point selects all columns in native order, so its folds
        // are the same models bit for bit
        assert_eq!(curve[2].rmse_mean, math::mean(&rmse));
        let mae: Vec<f64> = full.report.folds.iter().map(|f| f.mae).collect();
        assert_eq!(curve[2].mae_mean, math::mean(&mae));
    }

    #[test]
    fn curve_rejects_bad_rankings() {
        let data = toy_dataset(30, 3, 21, 0);
        let opts = CvOptions { k: 3, explain: false, ..CvOptions::default() };
        for bad in [&[][..], &[0, 0][..], &[3][..], &[0, 1, 2, 1][..]] {
            assert!(matches!(
                forward_feature_curve(&data, &quick_cfg(), &opts, bad),
                Err(EvalError::InvalidParameter(_))
            ));
        }
    }
}
