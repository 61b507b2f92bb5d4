//! Eigenvector-localisation statistics and their node-level features.
//!
//! Each community's eigenvectors are tested against configuration-model
//! replicas of the same community. A significant vector passes scores to the
//! nodes it localises on. Scores are summed over the vectors of a slice.

use rayon::prelude::*;

use super::{matrix_slices, Matrix, Operator};
use crate::graph::WeightedDigraph;
use crate::null_model::{NullEnsemble, ResamplePolicy};
use crate::seed;
use crate::stats::{mean, monte_carlo_p, p_to_score, upper_quantile, Tail};

/// Columns contributed by each operator.
pub const COLUMNS_PER_OPERATOR: usize = 15;
/// All localisation columns.
pub const COLUMNS: usize = 4 * COLUMNS_PER_OPERATOR;

/// Column suffixes within one operator block.
pub const COLUMN_SLUGS: [&str; COLUMNS_PER_OPERATOR] = [
    "ipr_norm1",
    "ipr_norm2",
    "ipr_norm3",
    "ipr_norm4",
    "exp_norm1",
    "exp_norm2",
    "exp_norm3",
    "exp_norm4",
    "ipr_90pct",
    "abs_90pct",
    "sign_stat1",
    "sign_stat2",
    "sign_equal1",
    "sign_equal2",
    "abs_eigvec",
];

const IPR_NORM: usize = 0;
const EXP_NORM: usize = 4;
const IPR_DIRECT: usize = 8;
const ABS_DIRECT: usize = 9;
const SIGN1: usize = 10;

/// Entries at or below this magnitude count as zero for sign statistics.
pub const SIGN_ZERO_TOL: f64 = 1e-10;
/// Relative tolerance for treating contributions as tied.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalisationConfig {
    pub replicas: usize,
    pub max_vectors: usize,
    pub alpha: f64,
    /// One ensemble per community for all operators instead of one per matrix.
    pub share_ensemble: bool,
}

impl Default for LocalisationConfig {
    fn default() -> Self {
        Self { replicas: 500, max_vectors: 20, alpha: 0.05, share_ensemble: false }
    }
}

/// Inverse participation ratio `Σ v⁴`.
pub fn ipr(v: &[f64]) -> f64 {
    v.iter().map(|x| x.powi(4)).sum()
}

/// `Σ (e^{|v|} - |v| - 1)`.
pub fn exp_stat(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs().exp_m1() - x.abs()).sum()
}

/// Strictly positive and strictly negative entry counts.
pub fn sign_counts(v: &[f64]) -> (usize, usize) {
    let pos = v.iter().filter(|&&x| x > SIGN_ZERO_TOL).count();
    let neg = v.iter().filter(|&&x| x < -SIGN_ZERO_TOL).count();
    (pos, neg)
}

/// `min(N₊ + 1(N₊=0)θ, N₋ + 1(N₋=0)θ) / θ`.
pub fn sign_stat(v: &[f64], theta: usize) -> f64 {
    let (p, n) = sign_counts(v);
    let t = theta as f64;
    let hp = if p == 0 { t } else { p as f64 };
    let hn = if n == 0 { t } else { n as f64 };
    hp.min(hn) / t
}

/// Basis in which entry contributions are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    FourthPower,
    Abs,
}

/// Fewest largest entries whose contributions reach 90% of the total, with
/// every entry tied to the last one included. Returns member indices.
pub fn direct_loc_members(v: &[f64], basis: Basis) -> Vec<usize> {
    let c: Vec<f64> = v
        .iter()
        .map(|x| match basis {
            Basis::FourthPower => x.powi(4),
            Basis::Abs => x.abs(),
        })
        .collect();
    let total: f64 = c.iter().sum();
    if total <= 0.0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| c[b].total_cmp(&c[a]));
    let target = 0.9 * total * (1.0 - 1e-12);
    let mut acc = 0.0;
    let mut cut = order.len();
    for (k, &i) in order.iter().enumerate() {
        acc += c[i];
        if acc >= target {
            cut = k + 1;
            break;
        }
    }
    let last = c[order[cut - 1]];
    while cut < order.len() && (last - c[order[cut]]).abs() <= TIE_TOL * last.max(f64::MIN_POSITIVE) {
        cut += 1;
    }
    order.truncate(cut);
    order
}

pub fn direct_loc_count(v: &[f64], basis: Basis) -> usize {
    direct_loc_members(v, basis).len()
}

/// Test statistics of one eigenvector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorStats {
    pub ipr: f64,
    pub exp: f64,
    pub sign: f64,
    pub count4: f64,
    pub count_abs: f64,
    pub max_abs: f64,
}

impl VectorStats {
    pub fn of(v: &[f64], theta: usize) -> Self {
        Self {
            ipr: ipr(v),
            exp: exp_stat(v),
            sign: sign_stat(v, theta),
            count4: direct_loc_count(v, Basis::FourthPower) as f64,
            count_abs: direct_loc_count(v, Basis::Abs) as f64,
            max_abs: v.iter().fold(0.0, |m: f64, x| m.max(x.abs())),
        }
    }
}

/// Per-member localisation output for one community.
#[derive(Debug, Clone, Default)]
pub struct CommunityLocalisation {
    /// `COLUMNS` scores per member, in member order.
    pub scores: Vec<Vec<f64>>,
    /// Sign features of vectors whose rare sign covers at least half the
    /// community: 4 columns per operator, kept out of the feature matrix.
    pub large_number: Vec<Vec<f64>>,
    pub large_number_vectors: usize,
    pub replica_failures: usize,
}

/// Null statistics per slice and eigenvector index.
type SliceNull = Vec<Vec<VectorStats>>;

fn null_for_matrix(replicas: &[WeightedDigraph], matrix: Matrix, k: usize, seed: u64) -> Vec<SliceNull> {
    let per_replica: Vec<Vec<Vec<VectorStats>>> = replicas
        .par_iter()
        .enumerate()
        .map(|(r, g)| {
            let w = g.symmetrise();
            let theta = matrix.operators()[0].available(g.node_count(), k);
            matrix_slices(&w, matrix, k, seed::derive(seed, &[r as u64]))
                .into_iter()
                .map(|slice| slice.iter().map(|p| VectorStats::of(&p.vector, theta)).collect())
                .collect()
        })
        .collect();
    let slices = matrix.operators().len();
    (0..slices)
        .map(|s| {
            (0..k)
                .map(|i| per_replica.iter().filter_map(|rep| rep[s].get(i).copied()).collect())
                .collect()
        })
        .collect()
}

fn policy(matrix: Matrix, n: usize, k: usize) -> ResamplePolicy {
    let op = matrix.operators()[0];
    ResamplePolicy::localisation(op.available(n, k), op.trivial())
}

/// Scores one significant norm-type test into four columns.
fn add_norm_scores(out: &mut [Vec<f64>], col: usize, v: &[f64], p: f64, null_max: &[f64]) {
    let n = v.len() as f64;
    let mut sorted = null_max.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let cutoff = mean(null_max);
    let g3 = upper_quantile(p).max(0.0);
    for (u, x) in v.iter().enumerate() {
        let a = x.abs();
        let at_least = m - sorted.partition_point(|&s| s < a);
        let t = (1 + at_least) as f64 / (m + 1) as f64;
        let row = &mut out[u];
        row[col] += n.sqrt() * a;
        row[col + 1] += p_to_score(t, 0.5);
        if m > 0 && a >= cutoff {
            row[col + 2] += g3;
            row[col + 3] += a;
        }
    }
}

/// Scores a significant sign test. Returns `true` when the vector was routed
/// to the large-number sink instead of the features.
fn add_sign_scores(out: &mut [Vec<f64>], sink: &mut [Vec<f64>], col: usize, sink_col: usize, v: &[f64], p: f64) -> bool {
    let n = v.len();
    let (pos, neg) = sign_counts(v);
    let hp = if pos == 0 { n } else { pos };
    let hn = if neg == 0 { n } else { neg };
    let z = upper_quantile(p);
    let large = 2 * hp.min(hn) >= n;
    let target = if large { sink } else { out };
    let base = if large { sink_col } else { col };
    for (u, &x) in v.iter().enumerate() {
        let is_pos = x > SIGN_ZERO_TOL;
        let is_neg = x < -SIGN_ZERO_TOL;
        let row = &mut target[u];
        if hp < hn && is_pos {
            row[base] += z;
            row[base + 1] += z / hp as f64;
        } else if hp > hn && is_neg {
            row[base] += z;
            row[base + 1] += z / hn as f64;
        } else if hp == hn && (is_pos || is_neg) {
            row[base + 2] += z;
            row[base + 3] += z / (hp + hn) as f64;
        }
    }
    large
}

/// Localisation features for one community, given its augmented subgraph.
pub fn community_localisation(g: &WeightedDigraph, cfg: &LocalisationConfig, seed: u64) -> CommunityLocalisation {
    let n = g.node_count();
    let mut out = CommunityLocalisation {
        scores: vec![vec![0.0; COLUMNS]; n],
        large_number: vec![vec![0.0; 16]; n],
        ..Default::default()
    };
    if n < 2 {
        return out;
    }
    let k = cfg.max_vectors;
    let w = g.symmetrise();
    let shared = cfg.share_ensemble.then(|| {
        NullEnsemble::build_resampled(g, cfg.replicas, seed::derive(seed, &[99]), &policy(Matrix::Combinatorial, n, k))
    });
    for (mi, matrix) in Matrix::ALL.into_iter().enumerate() {
        let owned;
        let ensemble = match &shared {
            Some(e) => e,
            None => {
                owned = NullEnsemble::build_resampled(g, cfg.replicas, seed::derive(seed, &[mi as u64]), &policy(matrix, n, k));
                &owned
            }
        };
        if shared.is_none() || mi == 0 {
            out.replica_failures += ensemble.failures;
        }
        let null = null_for_matrix(&ensemble.replicas, matrix, k, seed::derive(seed, &[100 + mi as u64]));
        let observed = matrix_slices(&w, matrix, k, seed::derive(seed, &[200 + mi as u64]));
        for ((op, slice), slice_null) in matrix.operators().iter().zip(observed).zip(null) {
            let opi = Operator::ALL.iter().position(|o| o == op).expect("known operator");
            let col = opi * COLUMNS_PER_OPERATOR;
            let theta = op.available(n, k);
            for (i, pair) in slice.iter().enumerate() {
                let v = &pair.vector;
                let obs = VectorStats::of(v, theta);
                let nulls = &slice_null[i];
                let pick = |f: fn(&VectorStats) -> f64| nulls.iter().map(f).collect::<Vec<f64>>();
                let null_max = pick(|s| s.max_abs);
                let p_ipr = monte_carlo_p(obs.ipr, &pick(|s| s.ipr), Tail::Upper);
                if p_ipr < cfg.alpha {
                    add_norm_scores(&mut out.scores, col + IPR_NORM, v, p_ipr, &null_max);
                }
                let p_exp = monte_carlo_p(obs.exp, &pick(|s| s.exp), Tail::Upper);
                if p_exp < cfg.alpha {
                    add_norm_scores(&mut out.scores, col + EXP_NORM, v, p_exp, &null_max);
                }
                for (basis, stat, c) in [
                    (Basis::FourthPower, obs.count4, IPR_DIRECT),
                    (Basis::Abs, obs.count_abs, ABS_DIRECT),
                ] {
                    let nv = match basis {
                        Basis::FourthPower => pick(|s| s.count4),
                        Basis::Abs => pick(|s| s.count_abs),
                    };
                    let p = monte_carlo_p(stat, &nv, Tail::Lower);
                    if p < cfg.alpha {
                        let score = p_to_score(p, cfg.alpha);
                        for u in direct_loc_members(v, basis) {
                            out.scores[u][col + c] += score;
                        }
                    }
                }
                let p_sign = monte_carlo_p(obs.sign, &pick(|s| s.sign), Tail::Lower);
                if p_sign < cfg.alpha
                    && add_sign_scores(&mut out.scores, &mut out.large_number, col + SIGN1, opi * 4, v, p_sign)
                {
                    out.large_number_vectors += 1;
                }
            }
        }
    }
    out
}

/// Localisation features for every node. `communities` lists member ids of
/// `aug`; communities below two nodes contribute zeros.
pub fn localisation_features(
    aug: &WeightedDigraph,
    communities: &[Vec<usize>],
    cfg: &LocalisationConfig,
    seed: u64,
) -> (Vec<Vec<f64>>, LocalisationDiagnostics) {
    let results: Vec<CommunityLocalisation> = communities
        .par_iter()
        .enumerate()
        .map(|(c, members)| {
            if members.len() < 2 {
                return CommunityLocalisation::default();
            }
            let sub = aug.induced_subgraph(members);
            community_localisation(&sub, cfg, seed::derive(seed, &[c as u64]))
        })
        .collect();
    let mut features = vec![vec![0.0; COLUMNS]; aug.node_count()];
    let mut diag = LocalisationDiagnostics { large_number: vec![vec![0.0; 16]; aug.node_count()], ..Default::default() };
    for (members, res) in communities.iter().zip(results) {
        diag.large_number_vectors += res.large_number_vectors;
        diag.replica_failures += res.replica_failures;
        for (local, &v) in members.iter().enumerate() {
            if let Some(row) = res.scores.get(local) {
                features[v] = row.clone();
                diag.large_number[v] = res.large_number[local].clone();
            }
        }
    }
    (features, diag)
}

/// Side outputs of the localisation stage.
#[derive(Debug, Clone, Default)]
pub struct LocalisationDiagnostics {
    pub large_number: Vec<Vec<f64>>,
    pub large_number_vectors: usize,
    pub replica_failures: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_stat_extremes() {
        let mut e1 = vec![0.0; 10];
        e1[0] = 1.0;
        assert!((exp_stat(&e1) - (std::f64::consts::E - 2.0)).abs() < 1e-12);
        let u = vec![0.01; 10_000];
        assert!((exp_stat(&u) - 0.501_67).abs() < 5e-5);
    }

    #[test]
    fn sign_stat_examples() {
        assert_eq!(sign_stat(&[0.5, 0.5, 0.5, -0.5], 4), 0.25);
        assert_eq!(sign_stat(&[1.0, 0.0, 0.0], 3), 1.0 / 3.0);
        assert_eq!(sign_stat(&[0.6, 0.8], 2), 1.0);
    }

    #[test]
    fn direct_counts() {
        let mut e1 = vec![0.0; 8];
        e1[3] = 1.0;
        assert_eq!(direct_loc_members(&e1, Basis::Abs), vec![3]);
        let u = vec![0.5; 4];
        assert_eq!(direct_loc_count(&u, Basis::FourthPower), 4);
        assert_eq!(direct_loc_count(&[0.9, 0.3, 0.3, 0.1], Basis::FourthPower), 1);
    }

    #[test]
    fn sign_scores_mark_rare_sign() {
        let v = [0.7, -0.1, -0.1, -0.1, -0.1, -0.1];
        let mut out = vec![vec![0.0; 4]; 6];
        let mut sink = vec![vec![0.0; 4]; 6];
        let large = add_sign_scores(&mut out, &mut sink, 0, 0, &v, 0.01);
        assert!(!large);
        assert!((out[0][0] - 2.326_347_874).abs() < 1e-6);
        assert_eq!(out[1][0], 0.0);
        let balanced = [0.5, -0.5, 0.5, -0.5];
        let large = add_sign_scores(&mut out, &mut sink, 0, 0, &balanced, 0.01);
        assert!(large);
        assert!(sink[0][2] > 0.0);
    }
}
