//! Beam search for heavy directed paths and the per-size path features.
//!
//! A path's fitness is its smallest edge weight. Parallel edges are merged by
//! their maximum weight. Ties in fitness are broken by the node sequence,
//! compared lexicographically, with larger sequences fitter.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::graph::{Collapse, WeightedDigraph};
use crate::null_model::configuration_replica;
use crate::seed;
use crate::stats::{monte_carlo_p, upper_quantile, Tail};

/// Smallest path size, in nodes.
pub const MIN_SIZE: usize = 3;
/// Largest path size with a feature column.
pub const MAX_SIZE: usize = 32;
/// Feature columns `path_3..path_32`.
pub const COLUMNS: usize = MAX_SIZE - MIN_SIZE + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct PathConfig {
    pub beam_width: usize,
    /// Largest size actually searched; larger sizes emit zero columns.
    pub max_size: usize,
    pub replicas: usize,
    pub alpha: f64,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self { beam_width: 5000, max_size: 21, replicas: 20, alpha: 0.05 }
    }
}

pub fn column_names() -> Vec<String> {
    (MIN_SIZE..=MAX_SIZE).map(|k| format!("path_{k}")).collect()
}

/// A simple directed path with its fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub fitness: f64,
    pub nodes: Vec<usize>,
}

impl Eq for Path {}

impl Ord for Path {
    fn cmp(&self, other: &Self) -> Ordering {
        self.fitness.total_cmp(&other.fitness).then_with(|| self.nodes.cmp(&other.nodes))
    }
}

impl PartialOrd for Path {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Fixed-capacity pool keeping the fittest paths.
#[derive(Debug, Clone)]
pub struct Beam {
    capacity: usize,
    heap: BinaryHeap<Reverse<Path>>,
}

impl Beam {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, heap: BinaryHeap::with_capacity(capacity + 1) }
    }

    /// Beam filled with `capacity` empty paths of fitness 0.
    pub fn with_dummies(capacity: usize) -> Self {
        let mut b = Self::new(capacity);
        b.heap.extend((0..capacity).map(|_| Reverse(Path { fitness: 0.0, nodes: Vec::new() })));
        b
    }

    /// Least fit path held, if full.
    fn floor(&self) -> Option<&Path> {
        (self.heap.len() >= self.capacity).then(|| self.heap.peek().map(|r| &r.0)).flatten()
    }

    /// Whether `p` would enter the beam.
    pub fn admits(&self, p: &Path) -> bool {
        self.capacity > 0 && self.floor().map_or(true, |f| p > f)
    }

    /// Inserts `p` if it beats the least fit path, evicting that path.
    pub fn offer(&mut self, p: Path) -> bool {
        if !self.admits(&p) {
            return false;
        }
        self.heap.push(Reverse(p));
        if self.heap.len() > self.capacity {
            self.heap.pop();
        }
        true
    }

    /// Real (non-dummy) paths, fittest first.
    pub fn paths(&self) -> Vec<Path> {
        let mut v: Vec<Path> = self.heap.iter().filter(|r| !r.0.nodes.is_empty()).map(|r| r.0.clone()).collect();
        v.sort_by(|a, b| b.cmp(a));
        v
    }

    pub fn len(&self) -> usize {
        self.heap.iter().filter(|r| !r.0.nodes.is_empty()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Out- and in-lists of the max-collapsed graph, heaviest first.
#[derive(Debug, Clone)]
pub struct PathGraph {
    out: Vec<Vec<(usize, f64)>>,
    inn: Vec<Vec<(usize, f64)>>,
}

impl PathGraph {
    pub fn new(g: &WeightedDigraph) -> Self {
        let n = g.node_count();
        let mut out = vec![Vec::new(); n];
        let mut inn = vec![Vec::new(); n];
        let mut pairs: Vec<((usize, usize), f64)> = g.collapsed(Collapse::Max).into_iter().collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        for ((s, d), w) in pairs {
            if s != d {
                out[s].push((d, w));
                inn[d].push((s, w));
            }
        }
        let heavy_first = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(b.0.cmp(&a.0));
        for r in out.iter_mut().chain(inn.iter_mut()) {
            r.sort_by(heavy_first);
        }
        Self { out, inn }
    }

    pub fn node_count(&self) -> usize {
        self.out.len()
    }
}

/// Size-3 paths through each node, walking its in- and out-lists from the
/// heaviest edges and advancing whichever side has the heavier next edge.
/// A node is abandoned as soon as a candidate fails to enter the beam.
pub fn seed_paths(g: &PathGraph, beam_width: usize) -> Beam {
    let mut beam = Beam::with_dummies(beam_width);
    for v in 0..g.node_count() {
        let (inn, out) = (&g.inn[v], &g.out[v]);
        if inn.is_empty() || out.is_empty() {
            continue;
        }
        let (mut i, mut o) = (0, 0);
        loop {
            let (a, wa) = inn[i];
            let (b, wb) = out[o];
            if a != b {
                let p = Path { fitness: wa.min(wb), nodes: vec![a, v, b] };
                if !beam.offer(p) {
                    break;
                }
            }
            let next_in = inn.get(i + 1).map(|e| e.1);
            let next_out = out.get(o + 1).map(|e| e.1);
            match (next_in, next_out) {
                (None, None) => break,
                (Some(x), Some(y)) if x > y => i += 1,
                (Some(_), None) => i += 1,
                _ => o += 1,
            }
        }
    }
    beam
}

/// All one-edge tail extensions of the beam's paths, keeping the fittest `width`.
pub fn extend_beam(beam: &Beam, g: &PathGraph, width: usize) -> Beam {
    let mut next = Beam::new(width);
    for p in beam.heap.iter().map(|r| &r.0).filter(|p| !p.nodes.is_empty()) {
        let tail = *p.nodes.last().expect("non-empty");
        for &(x, w) in &g.out[tail] {
            if p.nodes.contains(&x) {
                continue;
            }
            let fitness = p.fitness.min(w);
            // Out-lists are sorted heaviest first, so later edges only lower the fitness.
            if let Some(f) = next.floor() {
                if fitness < f.fitness {
                    break;
                }
            }
            let mut nodes = Vec::with_capacity(p.nodes.len() + 1);
            nodes.extend_from_slice(&p.nodes);
            nodes.push(x);
            next.offer(Path { fitness, nodes });
        }
    }
    next
}

/// Beam contents for sizes `3..=max_size`; index 0 is size 3.
pub fn search(g: &PathGraph, cfg: &PathConfig) -> Vec<Vec<Path>> {
    let mut out = Vec::new();
    if cfg.max_size < MIN_SIZE {
        return out;
    }
    let mut beam = seed_paths(g, cfg.beam_width);
    out.push(beam.paths());
    for _ in MIN_SIZE + 1..=cfg.max_size {
        beam = extend_beam(&beam, g, cfg.beam_width);
        out.push(beam.paths());
    }
    out
}

/// Pooled null fitnesses per size from configuration replicas of `g`.
pub fn null_fitness(g: &WeightedDigraph, cfg: &PathConfig, seed: u64) -> Vec<Vec<f64>> {
    let per: Vec<Vec<Vec<f64>>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let rep = configuration_replica(g, seed::derive(seed, &[r as u64]));
            search(&PathGraph::new(&rep), cfg).into_iter().map(|ps| ps.iter().map(|p| p.fitness).collect()).collect()
        })
        .collect();
    let sizes = cfg.max_size.saturating_sub(MIN_SIZE - 1);
    (0..sizes).map(|k| per.iter().flat_map(|rep| rep.get(k).into_iter().flatten().copied()).collect()).collect()
}

/// Side outputs of the path stage.
#[derive(Debug, Clone, Default)]
pub struct PathDiagnostics {
    /// Significant paths per size, index 0 for size 3.
    pub significant: Vec<usize>,
}

/// Path features: for each size, every significant path adds `Φ⁻¹(1 - p)`
/// to each of its nodes.
pub fn path_features(g: &WeightedDigraph, cfg: &PathConfig, seed: u64) -> (Vec<Vec<f64>>, PathDiagnostics) {
    let n = g.node_count();
    let mut feats = vec![vec![0.0; COLUMNS]; n];
    let mut diag = PathDiagnostics::default();
    let observed = search(&PathGraph::new(g), cfg);
    let null = null_fitness(g, cfg, seed);
    for (k, (paths, nulls)) in observed.iter().zip(&null).enumerate() {
        if k >= COLUMNS {
            break;
        }
        let mut sorted = nulls.clone();
        sorted.sort_by(f64::total_cmp);
        let mut count = 0;
        for p in paths {
            // Count of nulls at least as fit, via the sorted pool.
            let at_least = sorted.len() - sorted.partition_point(|&x| x < p.fitness);
            let pv = (1 + at_least) as f64 / (sorted.len() + 1) as f64;
            debug_assert_eq!(pv, monte_carlo_p(p.fitness, nulls, Tail::Upper));
            if pv < cfg.alpha {
                count += 1;
                let s = upper_quantile(pv);
                for &v in &p.nodes {
                    feats[v][k] += s;
                }
            }
        }
        diag.significant.push(count);
    }
    (feats, diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::generate_weighted_er;
    use crate::graph::Edge;
    use proptest::prelude::*;

    fn pg(n: usize, e: &[(usize, usize, f64)]) -> PathGraph {
        PathGraph::new(&WeightedDigraph::new(n, e.iter().map(|&(a, b, w)| Edge::new(a, b, w)).collect()).unwrap())
    }

    /// Max-min over all simple paths with `k` nodes by depth-first enumeration.
    fn brute(g: &PathGraph, k: usize) -> Option<f64> {
        fn go(g: &PathGraph, path: &mut Vec<usize>, fit: f64, k: usize, best: &mut Option<f64>) {
            if path.len() == k {
                *best = Some(best.map_or(fit, |b: f64| b.max(fit)));
                return;
            }
            let tail = *path.last().unwrap();
            for &(x, w) in &g.out[tail] {
                if !path.contains(&x) {
                    path.push(x);
                    go(g, path, fit.min(w), k, best);
                    path.pop();
                }
            }
        }
        let mut best = None;
        for v in 0..g.node_count() {
            go(g, &mut vec![v], f64::INFINITY, k, &mut best);
        }
        best
    }

    #[test]
    fn single_chain() {
        let g = pg(3, &[(0, 1, 0.4), (1, 2, 0.7)]);
        let b = seed_paths(&g, 10);
        assert_eq!(b.paths(), vec![Path { fitness: 0.4, nodes: vec![0, 1, 2] }]);
        assert_eq!(b.heap.len(), 10);
    }

    #[test]
    fn extension_takes_minimum() {
        let g = pg(4, &[(0, 1, 0.5), (1, 2, 0.6), (2, 3, 0.9)]);
        let b = extend_beam(&seed_paths(&g, 5), &g, 5);
        assert_eq!(b.paths(), vec![Path { fitness: 0.5, nodes: vec![0, 1, 2, 3] }]);
        assert!(extend_beam(&b, &g, 5).is_empty());
    }

    #[test]
    fn tie_prefers_larger_sequence() {
        let g = pg(5, &[(0, 1, 0.5), (1, 2, 0.5), (3, 4, 0.5), (4, 2, 0.5)]);
        let b = seed_paths(&g, 1);
        assert_eq!(b.paths()[0].nodes, vec![3, 4, 2]);
    }

    #[test]
    fn seeding_beats_best_pair_per_node() {
        let g = PathGraph::new(&generate_weighted_er(50, 0.1, 7).unwrap());
        let top = seed_paths(&g, 5000).paths()[0].fitness;
        let oracle = (0..50)
            .filter_map(|v| {
                let (a, wa) = *g.inn[v].first()?;
                let (b, wb) = *g.out[v].first()?;
                (a != b).then_some(wa.min(wb))
            })
            .fold(0.0, f64::max);
        assert!(top >= oracle);
    }

    #[test]
    fn fitness_is_monotone_in_size() {
        let g = PathGraph::new(&generate_weighted_er(200, 0.03, 2).unwrap());
        let res = search(&g, &PathConfig { beam_width: 300, max_size: 12, ..PathConfig::default() });
        let best: Vec<f64> = res.iter().filter_map(|ps| ps.first().map(|p| p.fitness)).collect();
        assert!(best.windows(2).all(|w| w[1] <= w[0]));
        for ps in &res {
            for p in ps {
                let mut s = p.nodes.clone();
                s.sort_unstable();
                s.dedup();
                assert_eq!(s.len(), p.nodes.len());
            }
        }
    }

    #[test]
    fn planted_heavy_path_scores_its_members() {
        let bg = generate_weighted_er(400, 0.01, 3).unwrap();
        let mut edges = bg.edges().to_vec();
        let members: Vec<usize> = (0..10).map(|i| 7 + i * 37).collect();
        for w in members.windows(2) {
            edges.retain(|e| !(e.src == w[0] && e.dst == w[1]));
            edges.push(Edge::new(w[0], w[1], 0.99 + 0.001 * (w[0] % 7) as f64));
        }
        let g = WeightedDigraph::new(400, edges).unwrap();
        let cfg = PathConfig { beam_width: 500, max_size: 12, replicas: 10, alpha: 0.05 };
        let (f, _) = path_features(&g, &cfg, 1);
        let col = 10 - MIN_SIZE;
        assert!(members.iter().all(|&v| f[v][col] > 0.0));
        assert!(f.iter().all(|r| r.iter().all(|&x| x >= 0.0)));
        assert!(f.iter().all(|r| r[12 - MIN_SIZE + 1..].iter().all(|&x| x == 0.0)));
    }

    proptest! {
        #[test]
        fn dag_search_matches_bruteforce(edges in prop::collection::vec((0usize..8, 0usize..8, 0.01f64..1.0), 0..30)) {
            let e: Vec<_> = edges.into_iter().filter(|(a, b, _)| a < b).collect();
            let g = pg(8, &e);
            let res = search(&g, &PathConfig { beam_width: 10_000, max_size: 8, ..PathConfig::default() });
            for (idx, ps) in res.iter().enumerate() {
                let k = idx + MIN_SIZE;
                prop_assert_eq!(ps.first().map(|p| p.fitness), brute(&g, k));
            }
        }

        #[test]
        fn general_search_never_beats_bruteforce(edges in prop::collection::vec((0usize..7, 0usize..7, 0.01f64..1.0), 0..30)) {
            let e: Vec<_> = edges.into_iter().filter(|(a, b, _)| a != b).collect();
            let g = pg(7, &e);
            let res = search(&g, &PathConfig { beam_width: 10_000, max_size: 7, ..PathConfig::default() });
            for (idx, ps) in res.iter().enumerate() {
                if let Some(p) = ps.first() {
                    prop_assert!(p.fitness <= brute(&g, idx + MIN_SIZE).unwrap());
                }
            }
        }
    }
}
