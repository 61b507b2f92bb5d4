//! Community detection on the heavy-path augmented graph and the six
//! community-level node features.

pub mod augment;
pub mod louvain;

use std::collections::HashSet;

use rand::Rng as _;
use rayon::prelude::*;

pub use augment::{augment, Augmented};
pub use louvain::{louvain, modularity, Partition};

use crate::graph::WeightedDigraph;
use crate::null_model::configuration_replica;
use crate::seed;
use crate::stats::{monte_carlo_p, upper_quantile, Tail};

/// Communities below this size are flagged.
pub const SMALL_COMMUNITY: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CommunityConfig {
    /// Configuration replicas for the density test.
    pub replicas: usize,
    pub resolution: f64,
}

impl Default for CommunityConfig {
    fn default() -> Self {
        Self { replicas: 20, resolution: 1.0 }
    }
}

/// Augments `g` and runs Louvain on the symmetrised result.
pub fn detect_communities(g: &WeightedDigraph, resolution: f64, seed: u64) -> (Augmented, Partition) {
    let aug = augment(g);
    let part = louvain(&aug.graph.symmetrise(), resolution, seed);
    (aug, part)
}

/// Distinct directed edges among `members` over `s(s-1)`; 0 below two nodes.
pub fn community_density(g: &WeightedDigraph, members: &[usize]) -> f64 {
    let s = members.len();
    if s < 2 {
        return 0.0;
    }
    let inside: HashSet<usize> = members.iter().copied().collect();
    let mut pairs = HashSet::new();
    for &v in members {
        for e in g.out_edges(v) {
            if e.dst != v && inside.contains(&e.dst) {
                pairs.insert((v, e.dst));
            }
        }
    }
    pairs.len() as f64 / (s as f64 * (s as f64 - 1.0))
}

/// Geometric mean of all edge weights inside `members`; 0 without edges.
pub fn community_gaw(g: &WeightedDigraph, members: &[usize]) -> f64 {
    let inside: HashSet<usize> = members.iter().copied().collect();
    let (mut sum, mut count) = (0.0, 0usize);
    for &v in members {
        for e in g.out_edges(v) {
            if inside.contains(&e.dst) {
                sum += e.weight.ln();
                count += 1;
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).exp()
    }
}

/// Geometric mean of every edge weight of `g`.
pub fn graph_gaw(g: &WeightedDigraph) -> f64 {
    let all: Vec<usize> = (0..g.node_count()).collect();
    community_gaw(g, &all)
}

/// Six community features per node, each constant over a community.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityFeatures {
    pub density_full: Vec<f64>,
    pub density_avg: Vec<f64>,
    pub gaw_full: Vec<f64>,
    pub gaw_avg: Vec<f64>,
    pub density_config: Vec<f64>,
    pub small_flag: Vec<f64>,
}

/// Densities of one random community per configuration replica of `g`.
pub fn null_community_densities(g: &WeightedDigraph, cfg: &CommunityConfig, seed: u64) -> Vec<f64> {
    (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let rep = configuration_replica(g, seed::derive(seed, &[r as u64, 0]));
            if rep.node_count() == 0 {
                return 0.0;
            }
            let (_, part) = detect_communities(&rep, cfg.resolution, seed::derive(seed, &[r as u64, 1]));
            let mut rng = seed::rng(seed::derive(seed, &[r as u64, 2]));
            let pick = &part.communities[rng.gen_range(0..part.len())];
            community_density(&rep, pick)
        })
        .collect()
}

/// Community features of `g` for a partition found on its augmented graph.
/// Densities and GAWs are measured on `g` itself.
pub fn community_features(g: &WeightedDigraph, part: &Partition, cfg: &CommunityConfig, seed: u64) -> CommunityFeatures {
    let n = g.node_count();
    let gd = g.density();
    let gg = graph_gaw(g);
    let null = null_community_densities(g, cfg, seed);
    let per: Vec<[f64; 6]> = part
        .communities
        .par_iter()
        .map(|members| {
            let s = members.len() as f64;
            let d = community_density(g, members);
            let w = community_gaw(g, members);
            let dr = if gd > 0.0 { d / gd } else { 0.0 };
            let wr = if gg > 0.0 { w / gg } else { 0.0 };
            let config = if members.len() < 2 || null.is_empty() {
                0.0
            } else {
                let p = monte_carlo_p(d, &null, Tail::Upper);
                if p > 0.5 {
                    0.0
                } else {
                    upper_quantile(p)
                }
            };
            let small = if members.len() < SMALL_COMMUNITY { 1.0 } else { 0.0 };
            [dr, dr / s, wr, wr / s, config, small]
        })
        .collect();
    let mut cols = vec![vec![0.0; n]; 6];
    for (members, vals) in part.communities.iter().zip(&per) {
        for &v in members {
            for (c, &x) in vals.iter().enumerate() {
                cols[c][v] = x;
            }
        }
    }
    let mut it = cols.into_iter();
    let mut next = || it.next().expect("six columns");
    CommunityFeatures {
        density_full: next(),
        density_avg: next(),
        gaw_full: next(),
        gaw_avg: next(),
        density_config: next(),
        small_flag: next(),
    }
}
