//! Reduced-scale checks that planted structures surface in the features they
//! target, and that background graphs stay quiet.

use netanom::combine::FeatureMatrix;
use netanom::generators::generate_weighted_er;
use netanom::graph::{Edge, WeightedDigraph};
use netanom::pathfinder::{path_features, search, PathConfig, PathGraph};
use netanom::pipeline::{run_detect, Detection, PipelineConfig};

const N: usize = 300;
const P: f64 = 0.02;
const SEEDS: u64 = 3;

struct Planted {
    clique: Vec<usize>,
    ring: Vec<usize>,
    path: Vec<usize>,
}

impl Planted {
    fn new() -> Self {
        let spread = |off: usize| (0..10).map(|i| i * 29 + off).collect();
        Self { clique: spread(3), ring: spread(17), path: spread(11) }
    }

    fn edges(&self) -> Vec<(usize, usize, f64)> {
        let heavy = |i: usize| 0.99 + 0.0005 * (i % 20) as f64;
        let mut out = Vec::new();
        for (a, &u) in self.clique.iter().enumerate() {
            for &v in &self.clique[a + 1..] {
                out.push((u, v, heavy(out.len())));
            }
        }
        let k = self.ring.len();
        out.extend((0..k).map(|i| (self.ring[i], self.ring[(i + 1) % k], heavy(i))));
        out.extend(self.path.windows(2).enumerate().map(|(i, w)| (w[0], w[1], heavy(i + 3))));
        out
    }

    fn background(&self) -> Vec<usize> {
        (0..N).filter(|v| ![&self.clique, &self.ring, &self.path].iter().any(|s| s.contains(v))).collect()
    }
}

/// ER background with planted edges replacing any existing weight.
fn planted_graph(seed: u64, planted: &[(usize, usize, f64)]) -> WeightedDigraph {
    let g = generate_weighted_er(N, P, seed).unwrap();
    let mut edges: Vec<Edge> =
        g.edges().iter().filter(|e| !planted.iter().any(|&(a, b, _)| (a, b) == (e.src, e.dst))).cloned().collect();
    edges.extend(planted.iter().map(|&(a, b, w)| Edge::new(a, b, w)));
    WeightedDigraph::new(N, edges).unwrap()
}

fn small_config(seed: u64) -> PipelineConfig {
    let mut c = PipelineConfig { seed, ..PipelineConfig::default() };
    for (k, v) in [
        ("basic.null_draws", "2000"),
        ("community.replicas", "5"),
        ("localisation.replicas", "60"),
        ("localisation.max_vectors", "5"),
        ("netemd.references", "5"),
        ("netemd.nulls", "40"),
        ("path.beam_width", "300"),
        ("path.replicas", "10"),
        ("path.max_size", "12"),
    ] {
        c.set(k, v).unwrap();
    }
    c
}

fn detections() -> (Planted, Vec<Detection>) {
    let pl = Planted::new();
    let edges = pl.edges();
    let runs = (0..SEEDS).map(|s| run_detect(&planted_graph(s, &edges), &small_config(s)).unwrap()).collect();
    (pl, runs)
}

fn mean(m: &FeatureMatrix, name: &str, nodes: &[usize]) -> f64 {
    let v = m.column(m.column_index(name).unwrap());
    nodes.iter().map(|&i| v[i]).sum::<f64>() / nodes.len() as f64
}

#[test]
fn background_paths_are_rarely_significant() {
    let cfg = PathConfig { beam_width: 300, max_size: 5, replicas: 10, alpha: 0.05 };
    let (mut sig, mut total) = (vec![0usize; 3], vec![0usize; 3]);
    for seed in 0..SEEDS {
        let g = generate_weighted_er(N, P, seed).unwrap();
        let observed = search(&PathGraph::new(&g), &cfg);
        let (_, diag) = path_features(&g, &cfg, seed + 100);
        for k in 0..3 {
            sig[k] += diag.significant[k];
            total[k] += observed[k].len();
        }
    }
    for k in 0..3 {
        let frac = sig[k] as f64 / total[k] as f64;
        assert!(frac <= 2.0 * cfg.alpha, "size {}: {frac}", k + 3);
    }
}

#[test]
fn planted_structures_dominate_path_features() {
    let (pl, runs) = detections();
    let rest = pl.background();
    for d in &runs {
        for col in ["path_8", "path_10"] {
            let bg = mean(&d.features, col, &rest);
            for s in [&pl.clique, &pl.ring, &pl.path] {
                assert!(mean(&d.features, col, s) > 5.0 * bg.max(1.0), "{col}");
            }
        }
    }
}

#[test]
fn planted_clique_raises_community_density() {
    let (pl, runs) = detections();
    let rest = pl.background();
    for d in &runs {
        let c = mean(&d.features, "comm_density_full", &pl.clique);
        assert!(c > 2.0 * mean(&d.features, "comm_density_full", &rest), "{c}");
    }
}

#[test]
fn planted_clique_localises_top_adjacency_vectors() {
    let (pl, runs) = detections();
    let rest = pl.background();
    let raised = runs
        .iter()
        .filter(|d| mean(&d.features, "adj_upper_exp_norm1", &pl.clique) > mean(&d.features, "adj_upper_exp_norm1", &rest))
        .count();
    assert!(raised >= 2, "{raised} of {SEEDS}");
}
