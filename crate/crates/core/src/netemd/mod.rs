//! Distance-based tests: each community's node-statistic distributions are
//! compared with configuration replicas, and nodes in the tails of
//! significantly deviating statistics are scored.

pub mod distance;
pub mod motifs;

use rayon::prelude::*;

pub use distance::{edf_distance, netemd_distance, StandardisedEdf};
pub use motifs::{motif_statistics, MOTIF_STATS, TRIADS};

use crate::graph::WeightedDigraph;
use crate::null_model::{NullEnsemble, ResamplePolicy};
use crate::seed;
use crate::spectral::{operator_slices, Operator};
use crate::stats::{monte_carlo_p, trimmed_mean, upper_quantile, zscores, Tail};

/// Eigenvectors per operator.
pub const EIGVECS: usize = 5;

/// Motif columns (2 per statistic) followed by 2 per operator.
pub const COLUMNS: usize = 2 * MOTIF_STATS + 2 * 4;

/// Entries at or below this magnitude count as zero when choosing a sign.
const SIGN_TOL: f64 = 1e-10;

/// Scores within this of the top-5% boundary are included.
const BOUNDARY_TOL: f64 = 1e-9;

/// Odd power sums tried before keeping the vector as is.
const MAX_POWER: u32 = 64;

/// Column names in [`COLUMNS`] order.
pub fn column_names() -> Vec<String> {
    let mut out = Vec::with_capacity(COLUMNS);
    for k in 1..=MOTIF_STATS {
        out.push(format!("motif_{k}_score1"));
        out.push(format!("motif_{k}_score2"));
    }
    for op in Operator::ALL {
        out.push(format!("{}_netemd_score1", op.slug()));
        out.push(format!("{}_netemd_score2", op.slug()));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetemdConfig {
    /// Reference networks per test.
    pub references: usize,
    /// Null networks per test.
    pub nulls: usize,
    pub alpha: f64,
}

impl Default for NetemdConfig {
    fn default() -> Self {
        Self { references: 15, nulls: 100, alpha: 0.05 }
    }
}

fn is_symmetric(v: &[f64]) -> bool {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    (0..n).all(|i| (s[i] + s[n - 1 - i]).abs() <= SIGN_TOL)
}

/// Orients `v`: unchanged if its entries are symmetric about zero, else the
/// sign with more positive entries, ties broken by the first nonzero odd power sum.
pub fn choose_sign(v: &[f64]) -> Vec<f64> {
    if is_symmetric(v) {
        return v.to_vec();
    }
    let pos = v.iter().filter(|&&x| x > SIGN_TOL).count();
    let neg = v.iter().filter(|&&x| x < -SIGN_TOL).count();
    let flip = if pos != neg {
        neg > pos
    } else {
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        (0..MAX_POWER)
            .find_map(|a| {
                let p = 2 * a as i32 + 1;
                let sum: f64 = v.iter().map(|x| (x / scale).powi(p)).sum();
                let mag: f64 = v.iter().map(|x| (x / scale).abs().powi(p)).sum();
                (sum.abs() > 1e-12 * mag).then_some(sum < 0.0)
            })
            .unwrap_or(false)
    };
    if flip {
        v.iter().map(|x| -x).collect()
    } else {
        v.to_vec()
    }
}

/// Sign-fixed eigenvectors of the four operators, up to [`EIGVECS`] each.
pub fn eigen_statistics(g: &WeightedDigraph, tie_seed: u64) -> [Vec<Vec<f64>>; 4] {
    operator_slices(&g.symmetrise(), EIGVECS, tie_seed).map(|s| s.iter().map(|p| choose_sign(&p.vector)).collect())
}

/// Standardised distributions of each statistic for one network; `None`
/// where the network lacks the statistic.
type Profile = Vec<Option<StandardisedEdf>>;

fn trimmed_distance(x: &StandardisedEdf, refs: &[&Profile], s: usize) -> Option<f64> {
    let d: Vec<f64> = refs.iter().filter_map(|r| r[s].as_ref()).map(|r| edf_distance(x, r)).collect();
    (!d.is_empty()).then(|| trimmed_mean(&d))
}

/// Monte-Carlo p-value of each statistic of `target`.
fn test_profiles(target: &Profile, refs: &[Profile], nulls: &[Profile]) -> Vec<Option<f64>> {
    let refs: Vec<&Profile> = refs.iter().collect();
    (0..target.len())
        .map(|s| {
            let x = target[s].as_ref()?;
            let observed = trimmed_distance(x, &refs, s)?;
            let null: Vec<f64> =
                nulls.iter().filter_map(|p| p[s].as_ref()).filter_map(|y| trimmed_distance(y, &refs, s)).collect();
            (!null.is_empty()).then(|| monte_carlo_p(observed, &null, Tail::Upper))
        })
        .collect()
}

/// Node scores of one significant statistic: `|z|` where `|z| ≥ 2`, and
/// `Φ⁻¹(1 - p)` on the top 5% of `|z|` (boundary ties included).
pub fn node_scores(values: &[f64], p: f64) -> (Vec<f64>, Vec<f64>) {
    let n = values.len();
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if n == 0 || hi - lo < distance::POINT_MASS_RANGE {
        return (vec![0.0; n], vec![0.0; n]);
    }
    let z: Vec<f64> = zscores(values).into_iter().map(f64::abs).collect();
    let s1 = z.iter().map(|&a| if a >= 2.0 { a } else { 0.0 }).collect();
    let top = (n * 5).div_ceil(100);
    let mut sorted = z.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let cut = sorted[top - 1] - BOUNDARY_TOL;
    let q = upper_quantile(p);
    let s2 = z.iter().map(|&a| if a >= cut { q } else { 0.0 }).collect();
    (s1, s2)
}

fn motif_profile(g: &WeightedDigraph) -> Profile {
    motif_statistics(g).iter().map(|s| StandardisedEdf::new(s)).collect()
}

fn eigen_profile(g: &WeightedDigraph, tie_seed: u64) -> Profile {
    let stats = eigen_statistics(g, tie_seed);
    stats
        .iter()
        .flat_map(|vs| (0..EIGVECS).map(move |i| vs.get(i).and_then(|v| StandardisedEdf::new(v))))
        .collect()
}

/// Scores of one community.
#[derive(Debug, Clone, Default)]
pub struct CommunityNetemd {
    /// `COLUMNS` scores per member.
    pub scores: Vec<Vec<f64>>,
    pub significant: usize,
    pub replica_failures: usize,
}

/// Communities smaller than this cannot produce acceptable eigen replicas.
const MIN_EIGEN_NODES: usize = 4;

/// Scores for one community given its plain and augmented subgraphs (same node order).
pub fn community_netemd(plain: &WeightedDigraph, aug: &WeightedDigraph, cfg: &NetemdConfig, seed: u64) -> CommunityNetemd {
    let n = plain.node_count();
    let mut out = CommunityNetemd { scores: vec![vec![0.0; COLUMNS]; n], ..Default::default() };
    if n < 2 {
        return out;
    }
    let total = cfg.references + cfg.nulls;

    let motif_ens = NullEnsemble::build(plain, total, seed::derive(seed, &[0]));
    let motif_profiles: Vec<Profile> = motif_ens.replicas.par_iter().map(motif_profile).collect();
    let (mrefs, mnulls) = motif_profiles.split_at(cfg.references.min(motif_profiles.len()));
    let motif_stats = motif_statistics(plain);
    let target: Profile = motif_stats.iter().map(|s| StandardisedEdf::new(s)).collect();
    for (s, p) in test_profiles(&target, mrefs, mnulls).into_iter().enumerate() {
        let Some(p) = p.filter(|&p| p < cfg.alpha) else { continue };
        out.significant += 1;
        let (s1, s2) = node_scores(&motif_stats[s], p);
        for v in 0..n {
            out.scores[v][2 * s] += s1[v];
            out.scores[v][2 * s + 1] += s2[v];
        }
    }

    if n < MIN_EIGEN_NODES {
        return out;
    }
    let policy = ResamplePolicy::netemd(EIGVECS + 1);
    let eig_ens = NullEnsemble::build_resampled(aug, total, seed::derive(seed, &[1]), &policy);
    out.replica_failures = eig_ens.failures;
    let eig_profiles: Vec<Profile> = eig_ens
        .replicas
        .par_iter()
        .enumerate()
        .map(|(r, g)| eigen_profile(g, seed::derive(seed, &[2, r as u64])))
        .collect();
    let (erefs, enulls) = eig_profiles.split_at(cfg.references.min(eig_profiles.len()));
    let target_vecs = eigen_statistics(aug, seed::derive(seed, &[3]));
    let target: Profile = target_vecs
        .iter()
        .flat_map(|vs| (0..EIGVECS).map(move |i| vs.get(i).and_then(|v| StandardisedEdf::new(v))))
        .collect();
    let base = 2 * MOTIF_STATS;
    for (s, p) in test_profiles(&target, erefs, enulls).into_iter().enumerate() {
        let Some(p) = p.filter(|&p| p < cfg.alpha) else { continue };
        out.significant += 1;
        let (op, i) = (s / EIGVECS, s % EIGVECS);
        let (s1, s2) = node_scores(&target_vecs[op][i], p);
        for v in 0..n {
            out.scores[v][base + 2 * op] += s1[v];
            out.scores[v][base + 2 * op + 1] += s2[v];
        }
    }
    out
}

/// Side outputs of the distance stage.
#[derive(Debug, Clone, Default)]
pub struct NetemdDiagnostics {
    pub significant_tests: usize,
    pub replica_failures: usize,
}

/// Scores for every node of `g`; `aug` is its augmented graph on the same
/// nodes and `communities` lists member ids.
pub fn netemd_features(
    g: &WeightedDigraph,
    aug: &WeightedDigraph,
    communities: &[Vec<usize>],
    cfg: &NetemdConfig,
    seed: u64,
) -> (Vec<Vec<f64>>, NetemdDiagnostics) {
    let results: Vec<CommunityNetemd> = communities
        .par_iter()
        .enumerate()
        .map(|(c, members)| {
            community_netemd(
                &g.induced_subgraph(members),
                &aug.induced_subgraph(members),
                cfg,
                seed::derive(seed, &[c as u64]),
            )
        })
        .collect();
    let mut features = vec![vec![0.0; COLUMNS]; g.node_count()];
    let mut diag = NetemdDiagnostics::default();
    for (members, res) in communities.iter().zip(results) {
        diag.significant_tests += res.significant;
        diag.replica_failures += res.replica_failures;
        for (local, &v) in members.iter().enumerate() {
            if let Some(row) = res.scores.get(local) {
                features[v].clone_from(row);
            }
        }
    }
    (features, diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;
    use proptest::prelude::*;

    #[test]
    fn sign_examples() {
        assert_eq!(choose_sign(&[1.0, 1.0, -1.0]), vec![1.0, 1.0, -1.0]);
        assert_eq!(choose_sign(&[2.0, -1.0, -1.0]), vec![-2.0, 1.0, 1.0]);
        assert_eq!(choose_sign(&[3.0, -2.0, -1.0]), vec![-3.0, 2.0, 1.0]);
        assert_eq!(choose_sign(&[1.0, -1.0]), vec![1.0, -1.0]);
        // Equal counts: sum 3 - 2 > 0 keeps the vector.
        assert_eq!(choose_sign(&[3.0, -2.0]), vec![3.0, -2.0]);
        assert_eq!(choose_sign(&[-3.0, 2.0]), vec![3.0, -2.0]);
    }

    #[test]
    fn sign_needs_higher_power() {
        // Sum is zero; the cubes decide: 8 - 1 - 1 - 1... with counts 2 vs 2.
        let v = [2.0, 1.0, -1.5, -1.5];
        assert_eq!(v.iter().sum::<f64>(), 0.0);
        let cubes: f64 = v.iter().map(|x: &f64| x.powi(3)).sum();
        let got = choose_sign(&v);
        assert_eq!(got[0] > 0.0, cubes > 0.0);
    }

    #[test]
    fn score_thresholds() {
        let mut v = vec![0.0; 99];
        v.push(30.0);
        let (s1, s2) = node_scores(&v, 0.01);
        let z = zscores(&v);
        assert!((s1[99] - z[99]).abs() < 1e-12 && z[99] > 2.0);
        assert!(s1[..99].iter().all(|&x| x == 0.0));
        // Top 5 of 100: one outlier, then the 99 tied zeros all sit on the boundary.
        assert!((s2[99] - upper_quantile(0.01)).abs() < 1e-12);
        assert!(s2[..99].iter().all(|&x| x == s2[0]));
    }

    #[test]
    fn score1_cut_at_two() {
        // Two-point sample with |z| = 1 everywhere.
        let (s1, _) = node_scores(&[0.0, 1.0], 0.01);
        assert_eq!(s1, vec![0.0, 0.0]);
    }

    #[test]
    fn point_mass_scores_nothing() {
        let (s1, s2) = node_scores(&[2.0; 10], 0.001);
        assert!(s1.iter().chain(&s2).all(|&x| x == 0.0));
    }

    #[test]
    fn eigen_statistics_are_unit_eigenvectors() {
        let g = crate::generators::generate_weighted_er(40, 0.15, 3).unwrap();
        let w = g.symmetrise();
        let stats = eigen_statistics(&g, 1);
        for v in &stats[0] {
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
            // Rayleigh quotient residual on W + Wᵀ.
            let av: Vec<f64> = (0..40).map(|i| w.row(i).iter().map(|&(j, x)| x * v[j]).sum()).collect();
            let lambda: f64 = av.iter().zip(v).map(|(a, b)| a * b).sum();
            let res: f64 = av.iter().zip(v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
            assert!(res < 1e-6);
            assert_eq!(&choose_sign(v), v);
        }
        let tiny = WeightedDigraph::new(3, vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0)]).unwrap();
        assert!(eigen_statistics(&tiny, 0)[2].len() <= 2);
    }

    #[test]
    fn names_cover_columns() {
        let n = column_names();
        assert_eq!(n.len(), 40);
        assert_eq!(n[0], "motif_1_score1");
        assert_eq!(n[39], "rw_lap_netemd_score2");
    }

    proptest! {
        #[test]
        fn sign_is_idempotent(v in prop::collection::vec(-3.0f64..3.0, 1..20)) {
            let once = choose_sign(&v);
            prop_assert_eq!(choose_sign(&once), once);
        }
    }
}
