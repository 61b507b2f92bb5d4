//! Node-level weight and degree features: standardised degree and three
//! geometric-average-weight tests against resampled weights.

use std::collections::BTreeMap;

use rand::Rng as _;
use rayon::prelude::*;

use crate::graph::WeightedDigraph;
use crate::seed;
use crate::stats::{monte_carlo_p, p_to_score, zscores, Tail};

#[derive(Debug, Clone, PartialEq)]
pub struct BasicConfig {
    /// Null draws per degree class.
    pub null_draws: usize,
    pub alpha: f64,
}

impl Default for BasicConfig {
    fn default() -> Self {
        Self { null_draws: 10_000, alpha: 0.05 }
    }
}

/// Share of the largest weights entering a GAW statistic, in percent.
pub const GAW_PERCENTS: [u32; 3] = [100, 10, 20];

/// `⌈d · percent / 100⌉` in integer arithmetic.
pub fn top_count(d: usize, percent: u32) -> usize {
    (d * percent as usize).div_ceil(100)
}

/// Geometric mean of the largest `⌈percent · d / 100⌉` weights; 0 when empty.
pub fn gaw(weights: &[f64], percent: u32) -> f64 {
    let mut w = weights.to_vec();
    w.sort_by(|a, b| b.total_cmp(a));
    gaw_sorted_desc(&w, percent)
}

fn gaw_sorted_desc(desc: &[f64], percent: u32) -> f64 {
    let k = top_count(desc.len(), percent);
    if k == 0 {
        return 0.0;
    }
    (desc[..k].iter().map(|w| w.ln()).sum::<f64>() / k as f64).exp()
}

/// Incident edge weights of `v`, in and out.
pub fn incident_weights(g: &WeightedDigraph, v: usize) -> Vec<f64> {
    g.out_edges(v).chain(g.in_edges(v)).map(|e| e.weight).collect()
}

/// Signed z-score of total degree with population σ.
pub fn standardized_degree(g: &WeightedDigraph) -> Vec<f64> {
    let d: Vec<f64> = (0..g.node_count()).map(|v| g.degree(v) as f64).collect();
    zscores(&d)
}

/// Shared nulls: per degree `d`, the three GAW statistics of each resample.
#[derive(Debug, Clone)]
pub struct GawNull {
    pub classes: BTreeMap<usize, [Vec<f64>; 3]>,
}

impl GawNull {
    pub fn build(weights: &[f64], degrees: impl IntoIterator<Item = usize>, draws: usize, seed: u64) -> Self {
        let mut ds: Vec<usize> = degrees.into_iter().filter(|&d| d > 0).collect();
        ds.sort_unstable();
        ds.dedup();
        let classes = ds
            .into_par_iter()
            .map(|d| {
                let mut rng = seed::rng(seed::derive(seed, &[d as u64]));
                let mut out = [Vec::with_capacity(draws), Vec::with_capacity(draws), Vec::with_capacity(draws)];
                let mut buf = vec![0.0; d];
                for _ in 0..draws {
                    for x in buf.iter_mut() {
                        *x = weights[rng.gen_range(0..weights.len())];
                    }
                    buf.sort_by(|a, b| b.total_cmp(a));
                    for (slot, &pct) in out.iter_mut().zip(&GAW_PERCENTS) {
                        slot.push(gaw_sorted_desc(&buf, pct));
                    }
                }
                (d, out)
            })
            .collect();
        Self { classes }
    }
}

/// Features 1 and 6-8 per node.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicFeatures {
    pub std_degree: Vec<f64>,
    pub gaw: Vec<f64>,
    pub gaw_top10: Vec<f64>,
    pub gaw_top20: Vec<f64>,
}

pub fn basic_features(g: &WeightedDigraph, cfg: &BasicConfig, seed: u64) -> BasicFeatures {
    let n = g.node_count();
    let weights = g.weights();
    let null = GawNull::build(&weights, (0..n).map(|v| g.degree(v)), cfg.null_draws, seed);
    let mut scores = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for v in 0..n {
        let d = g.degree(v);
        let Some(classes) = null.classes.get(&d) else { continue };
        let mut w = incident_weights(g, v);
        w.sort_by(|a, b| b.total_cmp(a));
        for (k, &pct) in GAW_PERCENTS.iter().enumerate() {
            let p = monte_carlo_p(gaw_sorted_desc(&w, pct), &classes[k], Tail::Upper);
            scores[k][v] = p_to_score(p, cfg.alpha);
        }
    }
    let [gaw, gaw_top10, gaw_top20] = scores;
    BasicFeatures { std_degree: standardized_degree(g), gaw, gaw_top10, gaw_top20 }
}
