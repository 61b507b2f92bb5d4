//! Transaction-style synthetic network: normal in/out degrees, stub matching
//! with self-loop swaps, normal weights, and heavy cliques, rings and paths.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use super::{edge_index, set_edges, GeneratorError};
use crate::graph::{Edge, GroundTruth, PlantedStructure, StructureKind, WeightedDigraph};
use crate::seed;
use crate::stats::normal_quantile;

const REFERENCE_N: usize = 55_000;

#[derive(Debug, Clone, PartialEq)]
pub struct AccentureConfig {
    pub n: usize,
    pub in_mean: f64,
    pub in_sd: f64,
    pub out_mean: f64,
    pub out_sd: f64,
    pub weight_mean: f64,
    pub weight_sd: f64,
    /// Quantile range from which heavy weights are drawn.
    pub heavy_quantiles: (f64, f64),
    pub clique_sizes: Vec<usize>,
    pub ring_sizes: Vec<usize>,
    pub path_sizes: Vec<usize>,
    pub max_path_attempts: usize,
}

impl Default for AccentureConfig {
    fn default() -> Self {
        Self {
            n: REFERENCE_N,
            in_mean: 21.0,
            in_sd: 3.0,
            out_mean: 19.0,
            out_sd: 2.0,
            weight_mean: 1000.0,
            weight_sd: 200.0,
            heavy_quantiles: (0.99, 0.99999),
            clique_sizes: vec![8, 12],
            ring_sizes: vec![4, 10],
            path_sizes: vec![5, 10],
            max_path_attempts: 10_000,
        }
    }
}

impl AccentureConfig {
    /// Reference model on `n` nodes with degree means and deviations scaled by `n / 55000`.
    pub fn scaled(n: usize) -> Self {
        let f = n as f64 / REFERENCE_N as f64;
        let d = Self::default();
        Self { n, in_mean: d.in_mean * f, in_sd: d.in_sd * f, out_mean: d.out_mean * f, out_sd: d.out_sd * f, ..d }
    }

    /// Smallest weight a planted edge can carry.
    pub fn heavy_floor(&self) -> f64 {
        self.weight_mean + self.weight_sd * normal_quantile(self.heavy_quantiles.0)
    }
}

fn draw_degrees(n: usize, mean: f64, sd: f64, rng: &mut seed::Rng) -> Result<Vec<usize>, GeneratorError> {
    let dist = Normal::new(mean, sd).map_err(|e| GeneratorError::InvalidParameter(e.to_string()))?;
    Ok((0..n).map(|_| dist.sample(rng).floor().max(0.0) as usize).collect())
}

/// Decrements uniformly chosen nodes with positive degree until `deg` sums to `target`.
fn trim_to(deg: &mut [usize], target: usize, rng: &mut seed::Rng) {
    let mut total: usize = deg.iter().sum();
    let mut live: Vec<usize> = (0..deg.len()).filter(|&v| deg[v] > 0).collect();
    while total > target {
        let k = rng.gen_range(0..live.len());
        let v = live[k];
        deg[v] -= 1;
        total -= 1;
        if deg[v] == 0 {
            live.swap_remove(k);
        }
    }
}

/// Generates the network and its planted structures.
pub fn generate_accenture(cfg: &AccentureConfig, seed: u64) -> Result<(WeightedDigraph, GroundTruth), GeneratorError> {
    let n = cfg.n;
    let largest = cfg.clique_sizes.iter().chain(&cfg.ring_sizes).chain(&cfg.path_sizes).copied().max().unwrap_or(0);
    if n < largest.max(2) {
        return Err(GeneratorError::InvalidParameter(format!("n = {n} is smaller than the largest structure")));
    }
    let (qlo, qhi) = cfg.heavy_quantiles;
    if !(0.0 < qlo && qlo < qhi && qhi < 1.0) {
        return Err(GeneratorError::InvalidParameter(format!("heavy quantiles {qlo}..{qhi}")));
    }
    let mut rng = seed::rng(seed);
    let mut inn = draw_degrees(n, cfg.in_mean, cfg.in_sd, &mut rng)?;
    let mut out = draw_degrees(n, cfg.out_mean, cfg.out_sd, &mut rng)?;
    let (si, so): (usize, usize) = (inn.iter().sum(), out.iter().sum());
    if si > so {
        trim_to(&mut inn, so, &mut rng);
    } else {
        trim_to(&mut out, si, &mut rng);
    }
    let mut srcs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(out[v])).collect();
    let mut dsts: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(inn[v])).collect();
    dsts.shuffle(&mut rng);
    let m = srcs.len();
    if m == 0 {
        return Err(GeneratorError::InvalidParameter("degree draws produced no edges".into()));
    }
    for round in 0.. {
        let loops: Vec<usize> = (0..m).filter(|&i| srcs[i] == dsts[i]).collect();
        if loops.is_empty() {
            break;
        }
        if round >= 10_000 {
            return Err(GeneratorError::AttemptsExhausted { what: "a self-loop-free matching".into(), attempts: round });
        }
        for &l in &loops {
            let r = rng.gen_range(0..m);
            srcs.swap(l, r);
        }
    }
    let wdist = Normal::new(cfg.weight_mean, cfg.weight_sd).map_err(|e| GeneratorError::InvalidParameter(e.to_string()))?;
    let mut edges: Vec<Edge> = srcs
        .into_iter()
        .zip(dsts)
        .map(|(s, d)| {
            let w = loop {
                let w = wdist.sample(&mut rng);
                if w > 0.0 {
                    break w;
                }
            };
            Edge::new(s, d, w)
        })
        .collect();

    let heavy = |rng: &mut seed::Rng| cfg.weight_mean + cfg.weight_sd * normal_quantile(rng.gen_range(qlo..qhi));
    let mut index = edge_index(&edges);
    let mut truth = GroundTruth::new(n);
    for &k in &cfg.clique_sizes {
        let nodes = sample(&mut rng, n, k).into_vec();
        let pairs: Vec<(usize, usize)> =
            (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).map(|(i, j)| (nodes[i], nodes[j])).collect();
        set_edges(&mut edges, &mut index, &pairs, || heavy(&mut rng));
        truth.add(PlantedStructure { kind: StructureKind::Clique, nodes });
    }
    for &k in &cfg.ring_sizes {
        let nodes = sample(&mut rng, n, k).into_vec();
        let mut pairs: Vec<(usize, usize)> = nodes.windows(2).map(|w| (w[0], w[1])).collect();
        pairs.push((nodes[k - 1], nodes[0]));
        let w = heavy(&mut rng);
        set_edges(&mut edges, &mut index, &pairs, || w);
        truth.add(PlantedStructure { kind: StructureKind::Ring, nodes });
    }
    let g = WeightedDigraph::new(n, edges.clone())?;
    for &k in &cfg.path_sizes {
        let (nodes, ids) = random_simple_walk(&g, k, cfg.max_path_attempts, &mut rng)?;
        for id in ids {
            edges[id].weight = heavy(&mut rng);
        }
        truth.add(PlantedStructure { kind: StructureKind::Path, nodes });
    }
    Ok((WeightedDigraph::new(n, edges)?, truth))
}

/// A walk of `k` distinct nodes along existing edges; returns nodes and edge ids.
fn random_simple_walk(
    g: &WeightedDigraph,
    k: usize,
    attempts: usize,
    rng: &mut seed::Rng,
) -> Result<(Vec<usize>, Vec<usize>), GeneratorError> {
    for _ in 0..attempts {
        let mut nodes = vec![rng.gen_range(0..g.node_count())];
        let mut ids = Vec::with_capacity(k - 1);
        while nodes.len() < k {
            let last = *nodes.last().expect("non-empty");
            let options: Vec<usize> =
                g.out_edge_ids(last).iter().copied().filter(|&id| !nodes.contains(&g.edges()[id].dst)).collect();
            let Some(&id) = options.choose(rng) else { break };
            ids.push(id);
            nodes.push(g.edges()[id].dst);
        }
        if nodes.len() == k {
            return Ok((nodes, ids));
        }
    }
    Err(GeneratorError::AttemptsExhausted { what: format!("a simple path on {k} nodes"), attempts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Collapse;

    fn small() -> AccentureConfig {
        AccentureConfig { n: 2000, ..AccentureConfig::default() }
    }

    #[test]
    fn no_self_loops_and_heavy_structures() {
        let cfg = small();
        let (g, truth) = generate_accenture(&cfg, 5).unwrap();
        assert!(g.edges().iter().all(|e| e.src != e.dst && e.weight > 0.0));
        assert_eq!(truth.structures.len(), 6);
        let floor = cfg.heavy_floor();
        assert!((floor - 1465.3).abs() < 0.1);
        let max = g.collapsed(Collapse::Max);
        for s in &truth.structures {
            let k = s.nodes.len();
            let pairs: Vec<(usize, usize)> = match s.kind {
                StructureKind::Clique => (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect(),
                StructureKind::Ring => (0..k).map(|i| (i, (i + 1) % k)).collect(),
                _ => (0..k - 1).map(|i| (i, i + 1)).collect(),
            };
            for (a, b) in pairs {
                assert!(max[&(s.nodes[a], s.nodes[b])] >= floor);
            }
        }
    }

    #[test]
    fn degree_totals_match() {
        let (g, _) = generate_accenture(&small(), 9).unwrap();
        let mean_out = g.edge_count() as f64 / 2000.0;
        assert!(mean_out > 17.0 && mean_out < 21.0);
    }

    #[test]
    fn scaled_config_shrinks_means() {
        let c = AccentureConfig::scaled(5500);
        assert!((c.in_mean - 2.1).abs() < 1e-12);
    }
}
