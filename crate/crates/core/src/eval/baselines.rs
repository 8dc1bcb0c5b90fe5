//! Reference models the boosted ensemble is compared against: ordinary
//! least squares, a single regression tree, and a bagged forest. All three
//! are scored out-of-fold on the same partition as the main model.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::gbt::{train, train_forest, TrainConfig};
use crate::math;
use crate::rng::{derive_seed, SplitMix64};
use crate::signal::Dataset;

use super::{kfold_partition, metrics, CvOptions, EvalError, Metrics};

/// Least-squares coefficients `[intercept, b_1, .., b_m]` via the normal
/// equations. A singular Gram matrix gets one retry with a tiny ridge
/// (1e-8 of the mean diagonal) before giving up.
pub fn ols_fit(columns: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>, EvalError> {
    let m = columns.len();
    let n = y.len();
    if n == 0 {
        return Err(EvalError::EmptyInput("ols target"));
    }
    for c in columns {
        if c.len() != n {
            return Err(EvalError::LengthMismatch { left: c.len(), right: n });
        }
    }
    if columns.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite("ols input"));
    }
    let d = m + 1;
    // Gram matrix of [1 | X] and its projection of y, exploiting symmetry
    let mut a = vec![0.0f64; d * d];
    let mut b = vec![0.0f64; d];
    a[0] = n as f64;
    b[0] = y.iter().sum();
    for j in 0..m {
        let cj = &columns[j];
        a[(j + 1) * d] = cj.iter().sum();
        b[j + 1] = cj.iter().zip(y).map(|(x, t)| x * t).sum();
        for i in 0..=j {
            let dot: f64 = columns[i].iter().zip(cj).map(|(p, q)| p * q).sum();
            a[(j + 1) * d + i + 1] = dot;
        }
    }
    for i in 0..d {
        for j in i + 1..d {
            a[i * d + j] = a[j * d + i];
        }
    }
    if let Some(beta) = cholesky_solve(&a, &b, d) {
        return Ok(beta);
    }
    let mean_diag: f64 = (0..d).map(|i| a[i * d + i]).sum::<f64>() / d as f64;
    let ridge = 1e-8 * mean_diag;
    let mut aj = a;
    for i in 0..d {
        aj[i * d + i] += ridge;
    }
    cholesky_solve(&aj, &b, d).ok_or(EvalError::InvalidParameter(String::from(
        "least-squares system is singular",
    )))
}

/// Solve the symmetric positive-definite system `a x = b` (row-major, d x d).
fn cholesky_solve(a: &[f64], b: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0f64; d * d];
    for j in 0..d {
        let mut diag = a[j * d + j];
        for k in 0..j {
            diag -= l[j * d + k] * l[j * d + k];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return None;
        }
        let lj = math::sqrt(diag);
        l[j * d + j] = lj;
        for i in j + 1..d {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = s / lj;
        }
    }
    // forward then back substitution
    let mut z = vec![0.0f64; d];
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * d + k] * z[k];
        }
        z[i] = s / l[i * d + i];
    }
    let mut x = vec![0.0f64; d];
    for i in (0..d).rev() {
        let mut s = z[i];
        for k in i + 1..d {
            s -= l[k * d + i] * x[k];
        }
        x[i] = s / l[i * d + i];
    }
    Some(x)
}

/// Apply fitted coefficients to columns.
pub fn ols_predict(beta: &[f64], columns: &[Vec<f64>]) -> Result<Vec<f64>, EvalError> {
    if beta.len() != columns.len() + 1 {
        return Err(EvalError::LengthMismatch { left: beta.len(), right: columns.len() + 1 });
    }
    let n = columns.first().map_or(0, |c| c.len());
    let mut out = vec![beta[0]; n];
    for (j, c) in columns.iter().enumerate() {
        let w = beta[j + 1];
        for (o, x) in out.iter_mut().zip(c) {
            *o += w * x;
        }
    }
    Ok(out)
}

/// Pooled out-of-fold metrics for the linear baseline, on the same fold
/// partition the boosted model uses.
pub fn ols_baseline(data: &Dataset, opts: &CvOptions) -> Result<Metrics, EvalError> {
    let fold_of_row = kfold_partition(data, opts.k, opts.seed, opts.grouping)?;
    let n = data.n();
    let mut oof = vec![f64::NAN; n];
    for f in 0..opts.k {
        let train_rows: Vec<usize> = (0..n).filter(|&r| fold_of_row[r] != f).collect();
        let test_rows: Vec<usize> = (0..n).filter(|&r| fold_of_row[r] == f).collect();
        if train_rows.len() < 2 {
            return Err(EvalError::TooFewTrainRows { fold: f, rows: train_rows.len() });
        }
        let train_ds = data.select_rows(&train_rows);
        let test_ds = data.select_rows(&test_rows);
        let beta = ols_fit(train_ds.columns(), train_ds.y())?;
        let preds = ols_predict(&beta, test_ds.columns())?;
        for (&r, &p) in test_rows.iter().zip(&preds) {
            oof[r] = p;
        }
    }
    metrics(data.y(), &oof, data.m(), opts.convention)
}

/// Pooled out-of-fold metrics for the tree-based baselines.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TreeBaselines {
    pub single_tree: Metrics,
    pub random_forest: Metrics,
}

/// Scores a lone unshrunk regression tree and a bagged forest of
/// `forest_size` trees on the shared fold partition. Depth and
/// regularization come from `cfg`; sampling is disabled for the single tree
/// while the forest bootstraps rows per tree.
pub fn tree_baselines(
    data: &Dataset,
    cfg: &TrainConfig,
    opts: &CvOptions,
    forest_size: usize,
) -> Result<TreeBaselines, EvalError> {
    if forest_size == 0 {
        return Err(EvalError::InvalidParameter(String::from(
            "forest_size must be positive",
        )));
    }
    let fold_of_row = kfold_partition(data, opts.k, opts.seed, opts.grouping)?;
    let n = data.n();
    let mut oof_tree = vec![f64::NAN; n];
    let mut oof_forest = vec![f64::NAN; n];
    for f in 0..opts.k {
        let train_rows: Vec<usize> = (0..n).filter(|&r| fold_of_row[r] != f).collect();
        let test_rows: Vec<usize> = (0..n).filter(|&r| fold_of_row[r] == f).collect();
        if train_rows.len() < 2 {
            return Err(EvalError::TooFewTrainRows { fold: f, rows: train_rows.len() });
        }
        let train_ds = data.select_rows(&train_rows);
        let test_ds = data.select_rows(&test_rows);
        let fold_seed = derive_seed(opts.seed, f as u64);

        let tree_cfg = TrainConfig {
            n_estimators: 1,
            learning_rate: 1.0,
            gamma: 0.0,
            subsample: 1.0,
            colsample: 1.0,
            seed: fold_seed,
            ..cfg.clone()
        };
        let tree = train(&train_ds, &tree_cfg)?;
        for (&r, p) in test_rows.iter().zip(tree.predict_dataset(&test_ds)?) {
            oof_tree[r] = p;
        }

        let mut seed_stream = SplitMix64::new(fold_seed).fork(1);
        let tree_seeds: Vec<u64> = (0..forest_size).map(|_| seed_stream.next_u64()).collect();
        let forest = train_forest(&train_ds, cfg, &tree_seeds)?;
        for (&r, p) in test_rows.iter().zip(forest.predict_dataset(&test_ds)?) {
            oof_forest[r] = p;
        }
    }
    Ok(TreeBaselines {
        single_tree: metrics(data.y(), &oof_tree, data.m(), opts.convention)?,
        random_forest: metrics(data.y(), &oof_forest, data.m(), opts.convention)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{kfold_cv, R2Convention};
    use alloc::format;
    use alloc::vec::Vec;

    fn linear_dataset(n: usize, noise: f64, seed: u64) -> Dataset {
        let mut rng = SplitMix64::new(seed);
        let x0: Vec<f64> = (0..n).map(|_| rng.next_f64() * 10.0).collect();
        let x1: Vec<f64> = (0..n).map(|_| rng.next_f64() * 4.0).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| (10.0 + 3.0 * x0[i] + 2.0 * x1[i] + noise * rng.next_normal()).clamp(0.0, 100.0))
            .collect();
        let t: Vec<f64> = (0..n).map(|i| i as f64).collect();
        Dataset::new(
            alloc::vec![format!("f0"), format!("f1")],
            alloc::vec![x0, x1],
            y,
            t,
            None,
        )
        .unwrap()
    }

    #[test]
    fn recovers_a_noiseless_linear_law() {
        let data = linear_dataset(80, 0.0, 5);
        let beta = ols_fit(data.columns(), data.y()).unwrap();
        assert!((beta[0] - 10.0).abs() < 1e-6, "intercept {}", beta[0]);
        assert!((beta[1] - 3.0).abs() < 1e-6);
        assert!((beta[2] - 2.0).abs() < 1e-6);
        let preds = ols_predict(&beta, data.columns()).unwrap();
        for (p, y) in preds.iter().zip(data.y()) {
            assert!((p - y).abs() < 1e-6);
        }
    }

    #[test]
    fn single_feature_slope_matches_the_covariance_ratio() {
        let data = linear_dataset(60, 1.0, 9);
        let one = data.select_features(&[0]);
        let beta = ols_fit(one.columns(), one.y()).unwrap();
        let x = one.column(0);
        let y = one.y();
        let xm = math::mean(x);
        let ym = math::mean(y);
        let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
        let var: f64 = x.iter().map(|a| (a - xm) * (a - xm)).sum();
        assert!((beta[1] - cov / var).abs() < 1e-9);
        assert!((beta[0] - (ym - beta[1] * xm)).abs() < 1e-9);
    }

    #[test]
    fn collinear_columns_fall_back_to_the_ridge_retry() {
        let data = linear_dataset(40, 0.5, 2);
        let dup = data.column(0).to_vec();
        let cols = alloc::vec![data.column(0).to_vec(), dup];
        // exact collinearity: plain Cholesky fails, jitter resolves it
        let beta = ols_fit(&cols, data.y()).unwrap();
        assert!(beta.iter().all(|b| b.is_finite()));
        let preds = ols_predict(&beta, &cols).unwrap();
        assert!(preds.iter().all(|p| p.is_finite()));
    }

    #[test]
    fn ols_oof_beats_nothing_on_linear_data() {
        let data = linear_dataset(120, 0.3, 11);
        let opts = CvOptions { k: 4, seed: 2, explain: false, ..CvOptions::default() };
        let pooled = ols_baseline(&data, &opts).unwrap();
        assert!(pooled.rmse < 0.6, "rmse {}", pooled.rmse);
        assert!(pooled.adj_r2.unwrap() > 0.95);
    }

    fn curvy_dataset(n: usize, seed: u64) -> Dataset {
        let mut rng = SplitMix64::new(seed);
        let x0: Vec<f64> = (0..n).map(|_| rng.next_f64() * 10.0).collect();
        let x1: Vec<f64> = (0..n).map(|_| rng.next_f64() * 10.0).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let v = if x0[i] > 5.0 { 40.0 } else { 10.0 }
                    + if x1[i] > 3.0 { 20.0 } else { 0.0 }
                    + 0.5 * rng.next_normal();
                v.clamp(0.0, 100.0)
            })
            .collect();
        let t: Vec<f64> = (0..n).map(|i| i as f64).collect();
        Dataset::new(
            alloc::vec![format!("f0"), format!("f1")],
            alloc::vec![x0, x1],
            y,
            t,
            None,
        )
        .unwrap()
    }

    #[test]
    fn boosting_beats_ols_on_step_functions() {
        let data = curvy_dataset(200, 31);
        let opts = CvOptions { k: 4, seed: 6, explain: false, ..CvOptions::default() };
        let cfg = TrainConfig { n_estimators: 40, max_depth: 3, ..TrainConfig::default() };
        let boosted = kfold_cv(&data, &cfg, &opts).unwrap().report.pooled;
        let linear = ols_baseline(&data, &opts).unwrap();
        assert!(
            boosted.rmse < linear.rmse,
            "boosted {} vs ols {}",
            boosted.rmse,
            linear.rmse
        );
    }

    #[test]
    fn baseline_metrics_are_deterministic_and_ordered_sanely() {
        let data = curvy_dataset(150, 13);
        let opts = CvOptions { k: 3, seed: 4, explain: false, ..CvOptions::default() };
        let cfg = TrainConfig { max_depth: 4, ..TrainConfig::default() };
        let a = tree_baselines(&data, &cfg, &opts, 25).unwrap();
        let b = tree_baselines(&data, &cfg, &opts, 25).unwrap();
        assert_eq!(a, b);
        // a bagged forest should not be worse than its single-tree member
        // on held-out data for this noisy step target
        assert!(
            a.random_forest.rmse <= a.single_tree.rmse * 1.05,
            "forest {} tree {}",
            a.random_forest.rmse,
            a.single_tree.rmse
        );
        assert!(matches!(
            tree_baselines(&data, &cfg, &opts, 0),
            Err(EvalError::InvalidParameter(_))
        ));
    }

    #[test]
    fn conventions_flow_through() {
        let data = linear_dataset(90, 2.0, 17);
        let paper = CvOptions { k: 3, seed: 8, explain: false, ..CvOptions::default() };
        let standard = CvOptions { convention: R2Convention::Standard, ..paper.clone() };
        let mp = ols_baseline(&data, &paper).unwrap();
        let ms = ols_baseline(&data, &standard).unwrap();
        assert_eq!(mp.rmse, ms.rmse);
        assert_ne!(mp.r2, ms.r2);
    }
}
