//! Node statistics for the distance tests: strengths and weighted
//! participation in the 13 connected directed triads.

use std::sync::OnceLock;

use crate::graph::{Collapse, WeightedDigraph};

/// Connected directed triads, in statistic order 4..16.
pub const TRIADS: [&str; 13] =
    ["021D", "021U", "021C", "111D", "111U", "030T", "030C", "201", "120D", "120U", "120C", "210", "300"];

/// Strengths plus triads.
pub const MOTIF_STATS: usize = 16;

/// Edge lists of each triad over positions `a = 0, b = 1, c = 2`.
const TRIAD_EDGES: [&[(usize, usize)]; 13] = [
    &[(1, 0), (1, 2)],
    &[(0, 1), (2, 1)],
    &[(0, 1), (1, 2)],
    &[(0, 2), (2, 0), (1, 2)],
    &[(0, 2), (2, 0), (2, 1)],
    &[(0, 1), (2, 1), (0, 2)],
    &[(1, 0), (2, 1), (0, 2)],
    &[(0, 1), (1, 0), (0, 2), (2, 0)],
    &[(1, 2), (1, 0), (0, 2), (2, 0)],
    &[(0, 1), (2, 1), (0, 2), (2, 0)],
    &[(0, 1), (1, 2), (0, 2), (2, 0)],
    &[(0, 1), (1, 2), (2, 1), (0, 2), (2, 0)],
    &[(0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)],
];

/// Bit of the directed pair `(x, y)` among three positions.
fn bit(x: usize, y: usize) -> usize {
    const ORDER: [[usize; 3]; 3] = [[9, 0, 2], [1, 9, 4], [3, 5, 9]];
    ORDER[x][y]
}

const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Triad index of each 6-bit pattern, built from [`TRIAD_EDGES`] under all relabellings.
fn class_table() -> &'static [Option<u8>; 64] {
    static TABLE: OnceLock<[Option<u8>; 64]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [None; 64];
        for (class, edges) in TRIAD_EDGES.iter().enumerate() {
            for p in PERMS {
                let mask = edges.iter().fold(0usize, |m, &(x, y)| m | 1 << bit(p[x], p[y]));
                t[mask] = Some(class as u8);
            }
        }
        t
    })
}

/// Triad class of a 6-bit pattern with pair bits ordered
/// `01, 10, 02, 20, 12, 21`; `None` if not weakly connected.
pub fn triad_class(mask: usize) -> Option<usize> {
    class_table()[mask].map(usize::from)
}

/// Collapsed (summed) weights as sorted out-rows for lookup.
struct Lookup {
    out: Vec<Vec<(usize, f64)>>,
    nbrs: Vec<Vec<usize>>,
}

impl Lookup {
    fn new(g: &WeightedDigraph) -> Self {
        let n = g.node_count();
        let mut out = vec![Vec::new(); n];
        let mut nbrs = vec![Vec::new(); n];
        for ((s, d), w) in g.collapsed(Collapse::Sum) {
            if s == d {
                continue;
            }
            out[s].push((d, w));
            nbrs[s].push(d);
            nbrs[d].push(s);
        }
        for r in &mut out {
            r.sort_by_key(|&(d, _)| d);
        }
        for r in &mut nbrs {
            r.sort_unstable();
            r.dedup();
        }
        Self { out, nbrs }
    }

    fn w(&self, s: usize, d: usize) -> f64 {
        let row = &self.out[s];
        row.binary_search_by_key(&d, |&(x, _)| x).map_or(0.0, |i| row[i].1)
    }

    fn adjacent(&self, a: usize, b: usize) -> bool {
        self.nbrs[a].binary_search(&b).is_ok()
    }

    /// Class and weight product of the triad on `[j, a, b]`.
    fn triad(&self, nodes: [usize; 3]) -> Option<(usize, f64)> {
        let mut mask = 0;
        let mut prod = 1.0;
        for x in 0..3 {
            for y in 0..3 {
                if x != y {
                    let w = self.w(nodes[x], nodes[y]);
                    if w > 0.0 {
                        mask |= 1 << bit(x, y);
                        prod *= w;
                    }
                }
            }
        }
        triad_class(mask).map(|c| (c, prod))
    }
}

/// The 16 statistics, each a per-node vector: out-strength, in-strength,
/// total strength, then the weighted triad participations.
pub fn motif_statistics(g: &WeightedDigraph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let s = g.strengths();
    let mut stats = vec![s.out, s.inn, s.total];
    stats.extend((0..TRIADS.len()).map(|_| vec![0.0; n]));
    let look = Lookup::new(g);
    for j in 0..n {
        let nj = &look.nbrs[j];
        for (ia, &a) in nj.iter().enumerate() {
            for &b in &nj[ia + 1..] {
                if let Some((c, p)) = look.triad([j, a, b]) {
                    stats[3 + c][j] += p;
                }
            }
            for &b in &look.nbrs[a] {
                if b != j && !look.adjacent(j, b) {
                    if let Some((c, p)) = look.triad([j, a, b]) {
                        stats[3 + c][j] += p;
                    }
                }
            }
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;
    use proptest::prelude::*;

    fn graph(n: usize, e: &[(usize, usize, f64)]) -> WeightedDigraph {
        WeightedDigraph::new(n, e.iter().map(|&(a, b, w)| Edge::new(a, b, w)).collect()).unwrap()
    }

    /// Canonical code by brute force: smallest mask over relabellings, then
    /// compare against the catalogue the same way.
    fn canon(mask: usize) -> usize {
        PERMS
            .iter()
            .map(|p| {
                let mut m = 0;
                for x in 0..3 {
                    for y in 0..3 {
                        if x != y && mask & (1 << bit(x, y)) != 0 {
                            m |= 1 << bit(p[x], p[y]);
                        }
                    }
                }
                m
            })
            .min()
            .unwrap()
    }

    /// Independent count over all unordered pairs with the catalogue compared
    /// by canonical form and weights multiplied edge by edge.
    fn oracle(g: &WeightedDigraph) -> Vec<Vec<f64>> {
        let n = g.node_count();
        let w = g.collapsed(Collapse::Sum);
        let codes: Vec<usize> =
            TRIAD_EDGES.iter().map(|e| canon(e.iter().fold(0, |m, &(x, y)| m | 1 << bit(x, y)))).collect();
        let mut out = vec![vec![0.0; n]; 13];
        for j in 0..n {
            for a in 0..n {
                for b in a + 1..n {
                    if a == j || b == j {
                        continue;
                    }
                    let nodes = [j, a, b];
                    let (mut mask, mut prod) = (0, 1.0);
                    for x in 0..3 {
                        for y in 0..3 {
                            if let Some(&v) = (x != y).then(|| w.get(&(nodes[x], nodes[y]))).flatten() {
                                mask |= 1 << bit(x, y);
                                prod *= v;
                            }
                        }
                    }
                    if let Some(c) = codes.iter().position(|&k| k == canon(mask)) {
                        out[c][j] += prod;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn catalogue_is_complete() {
        let connected = (0..64).filter(|&m| triad_class(m).is_some()).count();
        // 64 patterns minus 003 (1), 012 (6) and 102 (3).
        assert_eq!(connected, 54);
    }

    #[test]
    fn cyclic_triangle() {
        let g = graph(3, &[(0, 1, 2.0), (1, 2, 3.0), (2, 0, 5.0)]);
        let s = motif_statistics(&g);
        let c = 3 + TRIADS.iter().position(|&t| t == "030C").unwrap();
        assert_eq!(s[c], vec![30.0; 3]);
        let unit = motif_statistics(&graph(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]));
        assert_eq!(unit[c], vec![1.0; 3]);
        assert_eq!(s[0], vec![2.0, 3.0, 5.0]);
        assert_eq!(s[1], vec![5.0, 2.0, 3.0]);
    }

    #[test]
    fn empty_graph_is_zero() {
        let s = motif_statistics(&graph(4, &[]));
        assert!(s.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn out_star_is_021d_at_every_member() {
        let g = graph(3, &[(0, 1, 1.0), (0, 2, 1.0)]);
        let s = motif_statistics(&g);
        assert_eq!(s[3], vec![1.0; 3]);
    }

    proptest! {
        #[test]
        fn matches_bruteforce(edges in prop::collection::vec((0usize..9, 0usize..9, 0.5f64..3.0), 0..40)) {
            let e: Vec<_> = edges.into_iter().filter(|(a, b, _)| a != b).collect();
            let g = graph(9, &e);
            let got = motif_statistics(&g);
            let want = oracle(&g);
            for c in 0..13 {
                for v in 0..9 {
                    prop_assert!((got[3 + c][v] - want[c][v]).abs() <= 1e-9 * want[c][v].abs().max(1.0));
                }
            }
        }
    }
}
