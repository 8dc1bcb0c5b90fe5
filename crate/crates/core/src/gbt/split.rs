//! Exact greedy split search over sorted feature values.

use alloc::vec::Vec;

/// Winning split for one node.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    /// Midpoint between the adjacent distinct values it separates.
    pub threshold: f64,
    pub gain: f64,
    pub left_g: f64,
    pub left_h: f64,
    pub left_count: usize,
}

/// Best split position in one pre-sorted feature slice, or `None` when no
/// candidate has strictly positive gain. `xs` must be ascending; gains are
/// scored as the structure-score improvement over keeping the node whole,
/// minus `gamma`. Ties keep the earliest (lowest-threshold) candidate.
pub(crate) fn scan_sorted(
    xs: &[f64],
    gs: &[f64],
    hs: &[f64],
    g_total: f64,
    h_total: f64,
    lambda: f64,
    gamma: f64,
    min_child_weight: f64,
) -> Option<SplitScan> {
    let n = xs.len();
    let parent_score = g_total * g_total / (h_total + lambda);
    let mut best: Option<SplitScan> = None;
    let mut g_left = 0.0;
    let mut h_left = 0.0;
    for i in 0..n.saturating_sub(1) {
        g_left += gs[i];
        h_left += hs[i];
        if xs[i + 1] == xs[i] {
            continue;
        }
        let threshold = 0.5 * (xs[i] + xs[i + 1]);
        // Degenerate midpoint (adjacent floats): rows cannot be separated.
        if !(threshold > xs[i] && threshold <= xs[i + 1]) {
            continue;
        }
        let h_right = h_total - h_left;
        if h_left < min_child_weight || h_right < min_child_weight {
            continue;
        }
        let g_right = g_total - g_left;
        let gain = 0.5
            * (g_left * g_left / (h_left + lambda) + g_right * g_right / (h_right + lambda)
                - parent_score)
            - gamma;
        if gain > 0.0 && best.as_ref().map_or(true, |b| gain > b.gain) {
            best = Some(SplitScan {
                threshold,
                gain,
                left_g: g_left,
                left_h: h_left,
                left_count: i + 1,
            });
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SplitScan {
    pub threshold: f64,
    pub gain: f64,
    pub left_g: f64,
    pub left_h: f64,
    pub left_count: usize,
}

/// Exhaustive best split over `features` for the rows in `rows`.
///
/// `columns` is the full column-major matrix; `g`/`h` are per-row gradient
/// statistics aligned with it. Feature ties are broken toward the lowest
/// feature index, then the lowest threshold.
pub fn best_split(
    rows: &[usize],
    features: &[usize],
    columns: &[Vec<f64>],
    g: &[f64],
    h: &[f64],
    lambda: f64,
    gamma: f64,
    min_child_weight: f64,
) -> Option<SplitCandidate> {
    if rows.len() < 2 {
        return None;
    }
    let g_total: f64 = rows.iter().map(|&r| g[r]).sum();
    let h_total: f64 = rows.iter().map(|&r| h[r]).sum();

    let mut order: Vec<usize> = Vec::with_capacity(rows.len());
    let mut xs = Vec::with_capacity(rows.len());
    let mut gs = Vec::with_capacity(rows.len());
    let mut hs = Vec::with_capacity(rows.len());

    let mut best: Option<SplitCandidate> = None;
    for &f in features {
        let col = &columns[f];
        order.clear();
        order.extend_from_slice(rows);
        order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
        xs.clear();
        gs.clear();
        hs.clear();
        for &r in &order {
            xs.push(col[r]);
            gs.push(g[r]);
            hs.push(h[r]);
        }
        if let Some(scan) =
            scan_sorted(&xs, &gs, &hs, g_total, h_total, lambda, gamma, min_child_weight)
        {
            if best.as_ref().map_or(true, |b| scan.gain > b.gain) {
                best = Some(SplitCandidate {
                    feature: f,
                    threshold: scan.threshold,
                    gain: scan.gain,
                    left_g: scan.left_g,
                    left_h: scan.left_h,
                    left_count: scan.left_count,
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_row_example() {
        // y = [0, 10], base = 5, g = [5, -5], h = 1 each, lambda = 1.
        let columns = vec![vec![1.0, 2.0]];
        let g = vec![5.0, -5.0];
        let h = vec![1.0, 1.0];
        let s = best_split(&[0, 1], &[0], &columns, &g, &h, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 1.5);
        // 0.5 * (25/2 + 25/2 - 0/3) = 12.5
        assert_abs_diff_eq!(s.gain, 12.5, epsilon = 1e-12);
        assert_eq!(s.left_g, 5.0);
        assert_eq!(s.left_h, 1.0);
        assert_eq!(s.left_count, 1);
    }

    #[test]
    fn gamma_can_reject_every_split() {
        let columns = vec![vec![1.0, 2.0]];
        let g = vec![5.0, -5.0];
        let h = vec![1.0, 1.0];
        assert!(best_split(&[0, 1], &[0], &columns, &g, &h, 1.0, 13.0, 0.0).is_none());
        // exactly at the gain: strict inequality rejects it
        assert!(best_split(&[0, 1], &[0], &columns, &g, &h, 1.0, 12.5, 0.0).is_none());
    }

    #[test]
    fn constant_feature_has_no_split() {
        let columns = vec![vec![3.0, 3.0, 3.0]];
        let g = vec![1.0, -2.0, 1.0];
        let h = vec![1.0, 1.0, 1.0];
        assert!(best_split(&[0, 1, 2], &[0], &columns, &g, &h, 1.0, 0.0, 0.0).is_none());
    }

    #[test]
    fn min_child_weight_blocks_thin_children() {
        let columns = vec![vec![1.0, 2.0, 3.0, 4.0]];
        let g = vec![4.0, 4.0, -4.0, -4.0];
        let h = vec![1.0, 1.0, 1.0, 1.0];
        let s = best_split(&[0, 1, 2, 3], &[0], &columns, &g, &h, 1.0, 0.0, 2.0).unwrap();
        // only the middle cut keeps two rows per side
        assert_eq!(s.threshold, 2.5);
        let none = best_split(&[0, 1, 2, 3], &[0], &columns, &g, &h, 1.0, 0.0, 3.0);
        assert!(none.is_none());
    }

    #[test]
    fn tie_breaks_prefer_lowest_feature_then_threshold() {
        // two identical columns: both produce the same best gain
        let col = vec![0.0, 1.0];
        let columns = vec![col.clone(), col];
        let g = vec![3.0, -3.0];
        let h = vec![1.0, 1.0];
        let s = best_split(&[0, 1], &[0, 1], &columns, &g, &h, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(s.feature, 0);

        // one column where two cuts tie: keep the lower threshold
        let columns = vec![vec![0.0, 1.0, 2.0, 3.0]];
        let g = vec![2.0, -2.0, 2.0, -2.0];
        let h = vec![1.0, 1.0, 1.0, 1.0];
        let s = best_split(&[0, 1, 2, 3], &[0], &columns, &g, &h, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(s.threshold, 0.5);
    }

    #[test]
    fn duplicate_values_share_a_side() {
        let columns = vec![vec![1.0, 1.0, 2.0]];
        let g = vec![5.0, 5.0, -10.0];
        let h = vec![1.0, 1.0, 1.0];
        let s = best_split(&[0, 1, 2], &[0], &columns, &g, &h, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(s.threshold, 1.5);
        assert_eq!(s.left_count, 2);
        assert_eq!(s.left_g, 10.0);
    }

    #[test]
    fn rows_subset_is_respected() {
        let columns = vec![vec![1.0, 2.0, 100.0]];
        let g = vec![5.0, -5.0, 1000.0];
        let h = vec![1.0, 1.0, 1.0];
        let s = best_split(&[0, 1], &[0], &columns, &g, &h, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(s.threshold, 1.5);
        assert_abs_diff_eq!(s.gain, 12.5, epsilon = 1e-12);
    }

    #[test]
    fn adjacent_floats_cannot_be_separated() {
        let lo = 1.0;
        let hi = f64::from_bits(1.0f64.to_bits() + 1);
        let columns = vec![vec![lo, hi]];
        let g = vec![5.0, -5.0];
        let h = vec![1.0, 1.0];
        // midpoint rounds onto one of the endpoints; no usable cut exists
        assert!(best_split(&[0, 1], &[0], &columns, &g, &h, 1.0, 0.0, 0.0).is_none());
    }
}
