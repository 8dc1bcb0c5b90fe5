//! best_split must agree with an exhaustive search over every
//! (feature, midpoint) pair. Inputs are integer-valued so both sides run the
//! same arithmetic on exactly representable sums and can be compared bit for
//! bit, tie-breaks included.

use fatigue_forge_core::gbt::{best_split, SplitCandidate};
use fatigue_forge_core::rng::SplitMix64;

struct Instance {
    columns: Vec<Vec<f64>>,
    g: Vec<f64>,
    h: Vec<f64>,
    rows: Vec<usize>,
    lambda: f64,
    gamma: f64,
    min_child_weight: f64,
}

fn random_instance(rng: &mut SplitMix64) -> Instance {
    let n = 2 + rng.next_below(199);
    let m = 1 + rng.next_below(5);
    let grid = 1 + rng.next_below(7); // small alphabets force duplicates
    let columns: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.next_below(grid) as f64).collect())
        .collect();
    let g: Vec<f64> = (0..n).map(|_| (rng.next_below(13) as i64 - 6) as f64 / 2.0).collect();
    let h: Vec<f64> = (0..n).map(|_| (1 + rng.next_below(3)) as f64).collect();
    let rows: Vec<usize> = if rng.next_below(4) == 0 {
        let k = 2 + rng.next_below(n - 1);
        rng.sample_indices(n, k)
    } else {
        (0..n).collect()
    };
    let lambda = [0.0, 1.0, 2.0][rng.next_below(3)];
    let gamma = [0.0, 0.25, 1.0][rng.next_below(3)];
    let min_child_weight = [0.0, 1.0, 2.0][rng.next_below(3)];
    Instance { columns, g, h, rows, lambda, gamma, min_child_weight }
}

/// Plain O(features * thresholds * rows) search, no sorting tricks shared
/// with the implementation under test.
fn brute_force(inst: &Instance) -> Option<SplitCandidate> {
    let g_total: f64 = inst.rows.iter().map(|&r| inst.g[r]).sum();
    let h_total: f64 = inst.rows.iter().map(|&r| inst.h[r]).sum();
    let parent = g_total * g_total / (h_total + inst.lambda);
    let mut best: Option<SplitCandidate> = None;
    for (f, col) in inst.columns.iter().enumerate() {
        let mut values: Vec<f64> = inst.rows.iter().map(|&r| col[r]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let threshold = 0.5 * (pair[0] + pair[1]);
            if !(threshold > pair[0]) {
                continue;
            }
            let mut left_g = 0.0;
            let mut left_h = 0.0;
            let mut left_count = 0;
            for &r in &inst.rows {
                if col[r] < threshold {
                    left_g += inst.g[r];
                    left_h += inst.h[r];
                    left_count += 1;
                }
            }
            let right_h = h_total - left_h;
            if left_h < inst.min_child_weight || right_h < inst.min_child_weight {
                continue;
            }
            let right_g = g_total - left_g;
            let gain = 0.5
                * (left_g * left_g / (left_h + inst.lambda)
                    + right_g * right_g / (right_h + inst.lambda)
                    - parent)
                - inst.gamma;
            if gain > 0.0 && best.as_ref().map_or(true, |b| gain > b.gain) {
                best = Some(SplitCandidate {
                    feature: f,
                    threshold,
                    gain,
                    left_g,
                    left_h,
                    left_count,
                });
            }
        }
    }
    best
}

#[test]
fn matches_exhaustive_search_on_random_instances() {
    let mut rng = SplitMix64::new(0xB1A5);
    let all_features: Vec<usize> = (0..5).collect();
    let mut splits_found = 0;
    for trial in 0..1000 {
        let inst = random_instance(&mut rng);
        let features = &all_features[..inst.columns.len()];
        let got = best_split(
            &inst.rows,
            features,
            &inst.columns,
            &inst.g,
            &inst.h,
            inst.lambda,
            inst.gamma,
            inst.min_child_weight,
        );
        let want = brute_force(&inst);
        assert_eq!(got, want, "trial {trial} diverged");
        if got.is_some() {
            splits_found += 1;
        }
    }
    // the corpus must actually exercise the splitting path
    assert!(splits_found > 700, "only {splits_found} instances split");
}

#[test]
fn constant_instance_never_splits() {
    let columns = vec![vec![2.0; 40]];
    let g: Vec<f64> = (0..40).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let h = vec![1.0; 40];
    let rows: Vec<usize> = (0..40).collect();
    assert_eq!(best_split(&rows, &[0], &columns, &g, &h, 1.0, 0.0, 0.0), None);
}
