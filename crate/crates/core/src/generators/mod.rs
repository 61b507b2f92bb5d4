//! Synthetic networks: weighted Erdős–Rényi backgrounds with planted
//! structures, the Accenture-style transaction model, and detectability bounds.

pub mod accenture;
pub mod bounds;

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::Rng as _;
use thiserror::Error;

use crate::graph::{Edge, GraphError, GroundTruth, PlantedStructure, StructureKind, WeightedDigraph};
use crate::seed;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("could not find {what} after {attempts} attempts")]
    AttemptsExhausted { what: String, attempts: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Weighted Erdős–Rényi digraph: each ordered pair `i != j` is an edge with
/// probability `p`, weights uniform on `(0, 1)`.
pub fn generate_weighted_er(n: usize, p: f64, seed: u64) -> Result<WeightedDigraph, GeneratorError> {
    if n < 2 {
        return Err(GeneratorError::InvalidParameter(format!("n = {n} must be at least 2")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(GeneratorError::InvalidParameter(format!("p = {p} must lie in (0, 1)")));
    }
    let mut rng = seed::rng(seed);
    let slots = n as u64 * (n as u64 - 1);
    let mut edges = Vec::with_capacity((slots as f64 * p * 1.1) as usize + 16);
    let log_q = (1.0 - p).ln();
    let mut pos: u64 = 0;
    loop {
        // Geometric skip to the next present slot.
        let u: f64 = 1.0 - rng.gen::<f64>();
        let skip = (u.ln() / log_q).floor();
        if skip >= (slots - pos) as f64 {
            break;
        }
        pos += skip as u64;
        let src = (pos / (n as u64 - 1)) as usize;
        let mut dst = (pos % (n as u64 - 1)) as usize;
        if dst >= src {
            dst += 1;
        }
        edges.push(Edge::new(src, dst, open_unit(&mut rng)));
        pos += 1;
        if pos >= slots {
            break;
        }
    }
    Ok(WeightedDigraph::new(n, edges)?)
}

fn open_unit(rng: &mut seed::Rng) -> f64 {
    loop {
        let x: f64 = rng.gen();
        if x > 0.0 {
            return x;
        }
    }
}

/// Draw ranges for [`plant_anomalies`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantConfig {
    /// Inclusive range of the number of planted structures.
    pub count: (usize, usize),
    /// Inclusive range of structure sizes (trees are always 9 nodes).
    pub size: (usize, usize),
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self { count: (5, 20), size: (5, 20) }
    }
}

/// Planted-structure weight: uniform on `(w, 1)`, or exactly 1 when `w = 1`.
fn heavy_uniform(w: f64, rng: &mut seed::Rng) -> f64 {
    if w >= 1.0 {
        1.0
    } else {
        rng.gen_range(w..1.0)
    }
}

/// Directed edges of a structure over `nodes` (distinct, in planting order).
pub fn structure_edges(kind: StructureKind, nodes: &[usize], rng: &mut seed::Rng) -> Vec<(usize, usize)> {
    let k = nodes.len();
    match kind {
        StructureKind::Path => nodes.windows(2).map(|w| (w[0], w[1])).collect(),
        StructureKind::Ring => {
            let mut e: Vec<_> = nodes.windows(2).map(|w| (w[0], w[1])).collect();
            e.push((nodes[k - 1], nodes[0]));
            e
        }
        StructureKind::Star => {
            let centre = rng.gen_range(0..k);
            (0..k)
                .filter(|&i| i != centre)
                .map(|i| if rng.gen_bool(0.5) { (nodes[i], nodes[centre]) } else { (nodes[centre], nodes[i]) })
                .collect()
        }
        StructureKind::Clique => {
            let mut e = Vec::with_capacity(k * (k - 1) / 2);
            for i in 0..k {
                for j in i + 1..k {
                    e.push(if rng.gen_bool(0.5) { (nodes[i], nodes[j]) } else { (nodes[j], nodes[i]) });
                }
            }
            e
        }
        StructureKind::Tree => {
            let (leaves, mids, root) = (&nodes[..5], &nodes[5..8], nodes[8]);
            let mut e = Vec::with_capacity(18);
            for &l in leaves {
                for &m in mids {
                    e.push((l, m));
                }
            }
            for &m in mids {
                e.push((m, root));
            }
            e
        }
    }
}

/// Sets each `(src, dst)` to `weight(...)`, replacing the first existing copy
/// of the edge or adding it.
fn set_edges(
    edges: &mut Vec<Edge>,
    index: &mut HashMap<(usize, usize), usize>,
    pairs: &[(usize, usize)],
    mut weight: impl FnMut() -> f64,
) {
    for &(s, d) in pairs {
        let w = weight();
        match index.get(&(s, d)) {
            Some(&i) => edges[i].weight = w,
            None => {
                index.insert((s, d), edges.len());
                edges.push(Edge::new(s, d, w));
            }
        }
    }
}

fn edge_index(edges: &[Edge]) -> HashMap<(usize, usize), usize> {
    let mut index = HashMap::with_capacity(edges.len());
    for (i, e) in edges.iter().enumerate() {
        index.entry((e.src, e.dst)).or_insert(i);
    }
    index
}

/// Plants random paths, rings, stars, cliques and trees with weights uniform
/// on `(w, 1)`. Members are drawn uniformly; structures may overlap.
pub fn plant_anomalies(
    g: &WeightedDigraph,
    w: f64,
    cfg: &PlantConfig,
    seed: u64,
) -> Result<(WeightedDigraph, GroundTruth), GeneratorError> {
    if !(w > 0.0 && w <= 1.0) {
        return Err(GeneratorError::InvalidParameter(format!("w = {w} must lie in (0, 1]")));
    }
    let n = g.node_count();
    if cfg.count.0 > cfg.count.1 || cfg.size.0 > cfg.size.1 || cfg.size.0 < 3 {
        return Err(GeneratorError::InvalidParameter(format!("bad plant ranges {cfg:?}")));
    }
    if n < cfg.size.1.max(9) {
        return Err(GeneratorError::InvalidParameter(format!("n = {n} is smaller than the largest structure")));
    }
    let mut rng = seed::rng(seed);
    let mut edges = g.edges().to_vec();
    let mut index = edge_index(&edges);
    let mut truth = GroundTruth::new(n);
    let count = rng.gen_range(cfg.count.0..=cfg.count.1);
    for _ in 0..count {
        let kind = StructureKind::ALL[rng.gen_range(0..5)];
        let k = if kind == StructureKind::Tree { 9 } else { rng.gen_range(cfg.size.0..=cfg.size.1) };
        let nodes: Vec<usize> = sample(&mut rng, n, k).into_vec();
        let pairs = structure_edges(kind, &nodes, &mut rng);
        set_edges(&mut edges, &mut index, &pairs, || heavy_uniform(w, &mut rng));
        truth.add(PlantedStructure { kind, nodes });
    }
    let graph = WeightedDigraph::with_labels(g.labels().to_vec(), edges)?;
    Ok((graph, truth))
}
