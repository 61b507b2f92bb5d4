//! Feature selection by importance rank averaged over training regimes.

/// Ranks with 1 for the largest value; tied values all take the worst
/// (largest) rank of their group.
pub fn ranks_worst_tie(values: &[f64]) -> Vec<usize> {
    values.iter().map(|&v| values.iter().filter(|&&u| u >= v).count()).collect()
}

/// Mean rank of each feature over the rows of `importances`.
pub fn average_ranks(importances: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = importances.first() else { return Vec::new() };
    let mut sum = vec![0.0; first.len()];
    for row in importances {
        for (s, r) in sum.iter_mut().zip(ranks_worst_tie(row)) {
            *s += r as f64;
        }
    }
    sum.iter().map(|s| s / importances.len() as f64).collect()
}

/// Feature indices sorted by average rank, best first; ties by index.
fn ordered(importances: &[Vec<f64>]) -> Vec<(usize, f64)> {
    let mut v: Vec<(usize, f64)> = average_ranks(importances).into_iter().enumerate().collect();
    v.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    v
}

/// The `cutoff` features with the best average rank, best first.
pub fn select_features(importances: &[Vec<f64>], cutoff: usize) -> Vec<usize> {
    ordered(importances).into_iter().take(cutoff).map(|(i, _)| i).collect()
}

/// `(position, feature, average rank)` in selection order, for plotting.
pub fn rank_curve(importances: &[Vec<f64>]) -> Vec<(usize, usize, f64)> {
    ordered(importances).into_iter().enumerate().map(|(k, (i, r))| (k + 1, i, r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worst_rank_ties() {
        assert_eq!(ranks_worst_tie(&[0.5, 0.2, 0.2, 0.1, 0.0, 0.0]), vec![1, 3, 3, 4, 6, 6]);
    }

    #[test]
    fn identical_regimes_reduce_to_one_ranking() {
        let row: Vec<f64> = (0..140).map(|i| ((i * 37) % 140) as f64).collect();
        let sel = select_features(&vec![row.clone(); 27], 44);
        let mut idx: Vec<usize> = (0..140).collect();
        idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
        assert_eq!(sel, idx[..44].to_vec());
    }

    #[test]
    fn always_first_is_selected() {
        let rows: Vec<Vec<f64>> = (0..5).map(|r| (0..10).map(|i| if i == 7 { 10.0 } else { ((i + r) % 10) as f64 }).collect()).collect();
        assert_eq!(select_features(&rows, 1), vec![7]);
    }

    proptest! {
        #[test]
        fn block_structure_matches_oracle(
            noise in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 30), 1..8),
            block in 1usize..10,
            cutoff in 0usize..35,
        ) {
            // A planted block of features carries importance above every other feature.
            let rows: Vec<Vec<f64>> = noise
                .iter()
                .map(|r| r.iter().enumerate().map(|(i, &x)| if i < block { 2.0 + x } else { x }).collect())
                .collect();
            let sel = select_features(&rows, cutoff);
            prop_assert_eq!(sel.len(), cutoff.min(30));
            // Oracle: recompute ranks by sorting each row directly.
            let mut avg = vec![0.0; 30];
            for r in &rows {
                let mut order: Vec<usize> = (0..30).collect();
                order.sort_by(|&a, &b| r[b].total_cmp(&r[a]));
                let mut pos = 0;
                while pos < 30 {
                    let mut end = pos;
                    while end + 1 < 30 && r[order[end + 1]] == r[order[pos]] {
                        end += 1;
                    }
                    for &i in &order[pos..=end] {
                        avg[i] += (end + 1) as f64;
                    }
                    pos = end + 1;
                }
            }
            for a in avg.iter_mut() {
                *a /= rows.len() as f64;
            }
            let mut want: Vec<usize> = (0..30).collect();
            want.sort_by(|&a, &b| avg[a].total_cmp(&avg[b]).then(a.cmp(&b)));
            want.truncate(cutoff);
            prop_assert_eq!(&sel, &want);
            for i in 0..block.min(cutoff) {
                prop_assert!(sel[..block.min(cutoff)].contains(&sel[i]));
                prop_assert!(sel[i] < block);
            }
        }
    }
}
