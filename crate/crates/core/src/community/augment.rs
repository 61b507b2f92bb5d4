//! Closure of heavy two-step paths into direct edges.

use std::collections::HashMap;

use crate::graph::{Edge, WeightedDigraph};

/// Weights above this percentile of the original distribution are heavy.
pub const HEAVY_PERCENTILE: f64 = 0.99;

/// Augmented graph and what changed.
#[derive(Debug, Clone)]
pub struct Augmented {
    pub graph: WeightedDigraph,
    pub threshold: f64,
    /// Edges not present in the original graph, with their weights.
    pub added: Vec<Edge>,
    /// Existing edges whose heaviest copy was raised.
    pub raised: usize,
}

/// Repeatedly connects `u → x` for heavy `u → v → x`, with weight
/// `max(w(u, x), min(w1, w2))`, until nothing changes. The heavy threshold is
/// fixed on the original weights; parallel edges are compared by their maximum.
pub fn augment(g: &WeightedDigraph) -> Augmented {
    let Some(threshold) = g.weight_percentile(HEAVY_PERCENTILE) else {
        return Augmented { graph: g.clone(), threshold: f64::INFINITY, added: Vec::new(), raised: 0 };
    };
    // Heaviest copy of each ordered pair.
    let mut best: HashMap<(usize, usize), (usize, f64)> = HashMap::with_capacity(g.edge_count());
    for (i, e) in g.edges().iter().enumerate() {
        let slot = best.entry((e.src, e.dst)).or_insert((i, e.weight));
        if e.weight > slot.1 {
            *slot = (i, e.weight);
        }
    }
    let mut weight: HashMap<(usize, usize), f64> =
        best.iter().filter(|(_, &(_, w))| w > threshold).map(|(&k, &(_, w))| (k, w)).collect();
    let original = weight.clone();

    let mut changed = true;
    while changed {
        changed = false;
        let mut out: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
        for (&(u, v), &w) in &weight {
            out.entry(u).or_default().push((v, w));
        }
        for list in out.values_mut() {
            list.sort_by_key(|&(v, _)| v);
        }
        let mut starts: Vec<usize> = out.keys().copied().collect();
        starts.sort_unstable();
        for u in starts {
            for &(v, w1) in &out[&u] {
                let Some(next) = out.get(&v) else { continue };
                for &(x, w2) in next {
                    if x == u {
                        continue;
                    }
                    let cand = w1.min(w2);
                    let slot = weight.entry((u, x)).or_insert(0.0);
                    if cand > *slot {
                        *slot = cand;
                        changed = true;
                    }
                }
            }
        }
    }

    let mut edges = g.edges().to_vec();
    let mut added = Vec::new();
    let mut raised = 0;
    let mut keys: Vec<(usize, usize)> = weight.keys().copied().collect();
    keys.sort_unstable();
    for key in keys {
        let w = weight[&key];
        if original.get(&key) == Some(&w) {
            continue;
        }
        match best.get(&key) {
            Some(&(i, old)) if w > old => {
                edges[i].weight = w;
                raised += 1;
            }
            Some(_) => {}
            None => {
                let e = Edge::new(key.0, key.1, w);
                edges.push(e);
                added.push(e);
            }
        }
    }
    let graph = WeightedDigraph::with_self_loops(g.node_count(), edges)
        .expect("augmented edges are valid")
        .relabelled(g.labels());
    Augmented { graph, threshold, added, raised }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Collapse;

    /// Background of light edges so the heavy ones clear the 99th percentile.
    fn with_background(n: usize, heavy: &[(usize, usize, f64)]) -> WeightedDigraph {
        let mut e: Vec<Edge> = heavy.iter().map(|&(a, b, w)| Edge::new(a, b, w)).collect();
        for i in 0..400 {
            e.push(Edge::new(n + i % 50, n + (i * 7 + 1) % 50, 0.01 + (i % 13) as f64 * 1e-3));
        }
        e.retain(|x| x.src != x.dst);
        WeightedDigraph::new(n + 50, e).unwrap()
    }

    /// Brute-force fixpoint: apply the rule over all triples until stable.
    fn oracle(n: usize, g: &WeightedDigraph, thr: f64) -> HashMap<(usize, usize), f64> {
        let mut w = g.collapsed(Collapse::Max);
        loop {
            let mut next = w.clone();
            for u in 0..n {
                for v in 0..n {
                    for x in 0..n {
                        if u == x {
                            continue;
                        }
                        if let (Some(&a), Some(&b)) = (w.get(&(u, v)), w.get(&(v, x))) {
                            if a > thr && b > thr {
                                let s = next.entry((u, x)).or_insert(0.0);
                                *s = s.max(a.min(b));
                            }
                        }
                    }
                }
            }
            if next == w {
                return w;
            }
            w = next;
        }
    }

    #[test]
    fn chain_closes_to_forward_pairs() {
        let g = with_background(4, &[(0, 1, 5.0), (1, 2, 3.0), (2, 3, 4.0)]);
        let a = augment(&g);
        let got = a.graph.collapsed(Collapse::Max);
        let want = oracle(g.node_count(), &g, a.threshold);
        assert_eq!(got, want);
        assert_eq!(a.added.len(), 3);
        assert_eq!(got[&(0, 2)], 3.0);
        assert_eq!(got[&(0, 3)], 3.0);
        assert_eq!(got[&(1, 3)], 3.0);
    }

    #[test]
    fn raises_existing_edge() {
        let g = with_background(3, &[(0, 1, 5.0), (1, 2, 6.0), (0, 2, 0.02)]);
        let a = augment(&g);
        assert_eq!(a.raised, 1);
        assert!(a.added.is_empty());
        assert_eq!(a.graph.collapsed(Collapse::Max)[&(0, 2)], 5.0);
    }

    #[test]
    fn light_graph_unchanged() {
        let g = with_background(2, &[]);
        let a = augment(&g);
        assert!(a.added.is_empty());
        assert_eq!(a.raised, 0);
        assert_eq!(a.graph.edges(), g.edges());
    }

    #[test]
    fn cycle_does_not_create_self_loops() {
        let g = with_background(3, &[(0, 1, 5.0), (1, 2, 5.0), (2, 0, 5.0)]);
        let a = augment(&g);
        assert!(a.graph.edges().iter().all(|e| e.src != e.dst));
        assert_eq!(a.added.len(), 3);
    }
}
