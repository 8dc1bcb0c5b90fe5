//! Boosting loop and per-tree construction on pre-sorted feature segments.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::rng::SplitMix64;
use crate::signal::Dataset;

use super::split::{scan_sorted, SplitScan};
use super::{compute_grad_hess, leaf_weight, Ensemble, GbtError, Node, TrainConfig, Tree};

/// `ceil(frac * total)` clamped into `[1, total]`.
fn sample_size(frac: f64, total: usize) -> usize {
    let k = math::ceil(frac * total as f64) as usize;
    k.clamp(1, total)
}

fn rmse_of(y: &[f64], yhat: &[f64]) -> f64 {
    let ss: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    math::sqrt(ss / y.len() as f64)
}

/// Deterministic gradient boosting: base score = mean(y), then
/// `n_estimators` rounds of residual fitting with row/column subsampling.
pub fn train(data: &Dataset, cfg: &TrainConfig) -> Result<Ensemble, GbtError> {
    fit(data, cfg, None)
}

/// Like [`train`], also returning the training RMSE after each round.
pub fn train_traced(
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<(Ensemble, Vec<f64>), GbtError> {
    let mut trace = Vec::with_capacity(cfg.n_estimators);
    let model = fit(data, cfg, Some(&mut trace))?;
    Ok((model, trace))
}

fn fit(
    data: &Dataset,
    cfg: &TrainConfig,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<Ensemble, GbtError> {
    cfg.validate()?;
    let n = data.n();
    if n < 2 {
        return Err(GbtError::TooFewRows { n });
    }
    if data.m() == 0 {
        return Err(GbtError::NoFeatures);
    }
    let y = data.y();
    let base_score = math::mean(y);
    let mut yhat = vec![base_score; n];
    let mut rng = SplitMix64::new(cfg.seed);
    let rows_per_tree = sample_size(cfg.subsample, n);
    let mut builder = TreeBuilder::new(data.columns(), cfg);
    let mut trees = Vec::with_capacity(cfg.n_estimators);
    for _ in 0..cfg.n_estimators {
        let gh = compute_grad_hess(y, &yhat)?;
        let rows = rng.sample_indices(n, rows_per_tree);
        let (tree, leaf_of_row) = builder.build(&rows, &gh.g, &gh.h, &mut rng);
        for (p, &leaf) in yhat.iter_mut().zip(&leaf_of_row) {
            if let Node::Leaf { weight, .. } = tree.nodes[leaf] {
                *p += weight;
            }
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(rmse_of(y, &yhat));
        }
        trees.push(tree);
    }
    Ok(Ensemble { base_score, feature_names: data.feature_names().to_vec(), trees })
}

/// One tree grown on `rows` (gradients indexed against the full matrix),
/// with the column subsample drawn from `rng` and covers taken from the full
/// row set. Leaf weights already include the learning rate.
pub fn build_tree(
    rows: &[usize],
    columns: &[Vec<f64>],
    g: &[f64],
    h: &[f64],
    cfg: &TrainConfig,
    rng: &mut SplitMix64,
) -> Tree {
    TreeBuilder::new(columns, cfg).build(rows, g, h, rng).0
}

/// Averaged bag of single trees: each seed drives one bootstrap row draw
/// (with replacement, as multiplicity weights on g/h) plus a column draw,
/// and every tree is scaled by 1/B so the ensemble sums to the average.
pub fn train_forest(
    data: &Dataset,
    cfg: &TrainConfig,
    tree_seeds: &[u64],
) -> Result<Ensemble, GbtError> {
    cfg.validate()?;
    let n = data.n();
    if n < 2 {
        return Err(GbtError::TooFewRows { n });
    }
    if data.m() == 0 {
        return Err(GbtError::NoFeatures);
    }
    if tree_seeds.is_empty() {
        return Err(GbtError::InvalidConfig(alloc::string::String::from(
            "forest needs at least one tree seed",
        )));
    }
    let y = data.y();
    let base_score = math::mean(y);
    let tree_cfg = TrainConfig {
        learning_rate: 1.0 / tree_seeds.len() as f64,
        gamma: 0.0,
        n_estimators: 1,
        ..cfg.clone()
    };
    let mut builder = TreeBuilder::new(data.columns(), &tree_cfg);
    let mut counts = vec![0u32; n];
    let mut gw = vec![0.0; n];
    let mut hw = vec![0.0; n];
    let mut trees = Vec::with_capacity(tree_seeds.len());
    for &seed in tree_seeds {
        let mut rng = SplitMix64::new(seed);
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..n {
            counts[rng.next_below(n)] += 1;
        }
        let rows: Vec<usize> = (0..n).filter(|&r| counts[r] > 0).collect();
        for r in 0..n {
            let w = counts[r] as f64;
            gw[r] = w * (base_score - y[r]);
            hw[r] = w;
        }
        let (tree, _) = builder.build(&rows, &gw, &hw, &mut rng);
        trees.push(tree);
    }
    Ok(Ensemble { base_score, feature_names: data.feature_names().to_vec(), trees })
}

struct TreeBuilder<'a> {
    columns: &'a [Vec<f64>],
    cfg: &'a TrainConfig,
    /// Per-feature stable argsort of every row, computed once.
    full_order: Vec<Vec<u32>>,
    mask: Vec<bool>,
    /// Selected feature ids for the current tree, ascending.
    feats: Vec<usize>,
    /// Per selected feature: current rows in value order, partitioned into
    /// contiguous node segments as the tree grows.
    sorted: Vec<Vec<u32>>,
    xs: Vec<f64>,
    gs: Vec<f64>,
    hs: Vec<f64>,
    scratch: Vec<u32>,
    nodes: Vec<Node>,
}

impl<'a> TreeBuilder<'a> {
    fn new(columns: &'a [Vec<f64>], cfg: &'a TrainConfig) -> Self {
        let n = columns.first().map_or(0, |c| c.len());
        assert!(n <= u32::MAX as usize);
        let full_order = columns
            .iter()
            .map(|col| {
                let mut ord: Vec<u32> = (0..n as u32).collect();
                ord.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
                ord
            })
            .collect();
        Self {
            columns,
            cfg,
            full_order,
            mask: vec![false; n],
            feats: Vec::new(),
            sorted: Vec::new(),
            xs: Vec::new(),
            gs: Vec::new(),
            hs: Vec::new(),
            scratch: Vec::new(),
            nodes: Vec::new(),
        }
    }

    fn build(
        &mut self,
        rows: &[usize],
        g: &[f64],
        h: &[f64],
        rng: &mut SplitMix64,
    ) -> (Tree, Vec<usize>) {
        let m = self.columns.len();
        self.feats = rng.sample_indices(m, sample_size(self.cfg.colsample, m));
        self.mask.iter_mut().for_each(|b| *b = false);
        for &r in rows {
            self.mask[r] = true;
        }
        self.sorted.clear();
        for &f in &self.feats {
            let filtered: Vec<u32> = self.full_order[f]
                .iter()
                .copied()
                .filter(|&r| self.mask[r as usize])
                .collect();
            self.sorted.push(filtered);
        }
        let g_sum: f64 = rows.iter().map(|&r| g[r]).sum();
        let h_sum: f64 = rows.iter().map(|&r| h[r]).sum();
        self.nodes.clear();
        self.grow(0, rows.len(), g_sum, h_sum, 0, g, h);
        let mut tree = Tree { nodes: core::mem::take(&mut self.nodes) };
        let leaf_of_row = route_full(&mut tree, self.columns);
        (tree, leaf_of_row)
    }

    /// Grows the node covering segment `[lo, hi)` of every sorted feature
    /// array; returns its index. Nodes come out in DFS pre-order.
    fn grow(
        &mut self,
        lo: usize,
        hi: usize,
        g_sum: f64,
        h_sum: f64,
        depth: usize,
        g: &[f64],
        h: &[f64],
    ) -> usize {
        let mut best: Option<(usize, SplitScan)> = None;
        if depth < self.cfg.max_depth && hi - lo >= 2 {
            for fpos in 0..self.feats.len() {
                let col = &self.columns[self.feats[fpos]];
                self.xs.clear();
                self.gs.clear();
                self.hs.clear();
                for &r in &self.sorted[fpos][lo..hi] {
                    let r = r as usize;
                    self.xs.push(col[r]);
                    self.gs.push(g[r]);
                    self.hs.push(h[r]);
                }
                let scan = scan_sorted(
                    &self.xs,
                    &self.gs,
                    &self.hs,
                    g_sum,
                    h_sum,
                    self.cfg.lambda,
                    self.cfg.gamma,
                    self.cfg.min_child_weight,
                );
                if let Some(scan) = scan {
                    if best.as_ref().map_or(true, |(_, b)| scan.gain > b.gain) {
                        best = Some((fpos, scan));
                    }
                }
            }
        }
        let Some((fpos, scan)) = best else {
            let weight =
                leaf_weight(g_sum, h_sum, self.cfg.lambda, self.cfg.alpha, self.cfg.learning_rate);
            self.nodes.push(Node::Leaf { weight, cover: 0.0 });
            return self.nodes.len() - 1;
        };
        let feature = self.feats[fpos];
        let threshold = scan.threshold;
        let id = self.nodes.len();
        self.nodes.push(Node::Split { feature, threshold, left: 0, right: 0, cover: 0.0 });
        // Stable partition of every feature segment by the winning predicate,
        // keeping value order within each side.
        for fp in 0..self.feats.len() {
            let col = &self.columns[feature];
            self.scratch.clear();
            let seg = &mut self.sorted[fp][lo..hi];
            let mut w = 0;
            for i in 0..seg.len() {
                let r = seg[i];
                if col[r as usize] < threshold {
                    seg[w] = r;
                    w += 1;
                } else {
                    self.scratch.push(r);
                }
            }
            debug_assert_eq!(w, scan.left_count);
            seg[w..].copy_from_slice(&self.scratch);
        }
        let mid = lo + scan.left_count;
        let left = self.grow(lo, mid, scan.left_g, scan.left_h, depth + 1, g, h);
        let right =
            self.grow(mid, hi, g_sum - scan.left_g, h_sum - scan.left_h, depth + 1, g, h);
        match &mut self.nodes[id] {
            Node::Split { left: l, right: r, .. } => {
                *l = left;
                *r = right;
            }
            Node::Leaf { .. } => unreachable!(),
        }
        id
    }
}

/// Routes every training row through the finished tree, filling in covers
/// (unit hessians, so cover = row count) and returning each row's leaf.
fn route_full(tree: &mut Tree, columns: &[Vec<f64>]) -> Vec<usize> {
    let n = columns.first().map_or(0, |c| c.len());
    let mut cover = vec![0.0; tree.nodes.len()];
    let mut leaf_of_row = Vec::with_capacity(n);
    for r in 0..n {
        let mut i = 0;
        loop {
            cover[i] += 1.0;
            match &tree.nodes[i] {
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if columns[*feature][r] < *threshold { *left } else { *right };
                }
                Node::Leaf { .. } => break,
            }
        }
        leaf_of_row.push(i);
    }
    for (node, c) in tree.nodes.iter_mut().zip(cover) {
        match node {
            Node::Split { cover, .. } | Node::Leaf { cover, .. } => *cover = c,
        }
    }
    leaf_of_row
}
