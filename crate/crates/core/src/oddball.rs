//! Directed Oddball-lite baseline: nine power-law relationships between egonet
//! statistics, an outlier score per relationship and their sum.
//!
//! Egonets are 1-hop snowball samples on the symmetrised graph. Edge counts
//! count parallel edges separately. "Egonet in/out" statistics count edges
//! crossing the egonet boundary; "ego" statistics use the node's own edges.

use rayon::prelude::*;
use thiserror::Error;

use crate::graph::WeightedDigraph;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EgonetSummary {
    pub nodes: usize,
    pub edges: usize,
    pub weight: f64,
    pub max_weight: f64,
    pub boundary_in_degree: usize,
    pub boundary_in_weight: f64,
    pub boundary_out_degree: usize,
    pub boundary_out_weight: f64,
    pub ego_in_degree: usize,
    pub ego_in_weight: f64,
    pub ego_max_in_weight: f64,
    pub ego_out_degree: usize,
    pub ego_out_weight: f64,
    pub ego_max_out_weight: f64,
}

/// Relationship names in score-column order.
pub const RELATIONSHIPS: [&str; 9] = [
    "nodes_vs_edges",
    "edges_vs_weight",
    "egonet_out_degree_vs_weight",
    "egonet_in_degree_vs_weight",
    "ego_out_degree_vs_weight",
    "ego_in_degree_vs_weight",
    "egonet_weight_vs_max",
    "ego_in_weight_vs_max",
    "ego_out_weight_vs_max",
];

impl EgonetSummary {
    /// The nine `(x, y)` pairs in [`RELATIONSHIPS`] order.
    pub fn pairs(&self) -> [(f64, f64); 9] {
        [
            (self.nodes as f64, self.edges as f64),
            (self.edges as f64, self.weight),
            (self.boundary_out_degree as f64, self.boundary_out_weight),
            (self.boundary_in_degree as f64, self.boundary_in_weight),
            (self.ego_out_degree as f64, self.ego_out_weight),
            (self.ego_in_degree as f64, self.ego_in_weight),
            (self.weight, self.max_weight),
            (self.ego_in_weight, self.ego_max_in_weight),
            (self.ego_out_weight, self.ego_max_out_weight),
        ]
    }
}

fn summarise(g: &WeightedDigraph, v: usize, mark: &mut [bool]) -> EgonetSummary {
    let mut members = vec![v];
    mark[v] = true;
    for e in g.out_edges(v).chain(g.in_edges(v)) {
        let u = if e.src == v { e.dst } else { e.src };
        if !mark[u] {
            mark[u] = true;
            members.push(u);
        }
    }
    let mut s = EgonetSummary { nodes: members.len(), ..Default::default() };
    for &u in &members {
        for e in g.out_edges(u) {
            if mark[e.dst] {
                s.edges += 1;
                s.weight += e.weight;
                s.max_weight = s.max_weight.max(e.weight);
            } else {
                s.boundary_out_degree += 1;
                s.boundary_out_weight += e.weight;
            }
        }
        for e in g.in_edges(u) {
            if !mark[e.src] {
                s.boundary_in_degree += 1;
                s.boundary_in_weight += e.weight;
            }
        }
    }
    for e in g.in_edges(v) {
        s.ego_in_degree += 1;
        s.ego_in_weight += e.weight;
        s.ego_max_in_weight = s.ego_max_in_weight.max(e.weight);
    }
    for e in g.out_edges(v) {
        s.ego_out_degree += 1;
        s.ego_out_weight += e.weight;
        s.ego_max_out_weight = s.ego_max_out_weight.max(e.weight);
    }
    for &u in &members {
        mark[u] = false;
    }
    s
}

pub fn egonet_summaries(g: &WeightedDigraph) -> Vec<EgonetSummary> {
    let n = g.node_count();
    (0..n).into_par_iter().map_init(|| vec![false; n], |mark, v| summarise(g, v, mark)).collect()
}

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("{0} usable points; need at least 2 with distinct x")]
    TooFewPoints(usize),
}

/// Least squares of `ln y` on `ln x` over pairs with both coordinates positive
/// and finite. Returns `(ln a, b)` for `y = a x^b`.
pub fn powerlaw_fit(points: &[(f64, f64)]) -> Result<(f64, f64), FitError> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if logs.len() < 2 || sxx == 0.0 {
        return Err(FitError::TooFewPoints(logs.len()));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = sxy / sxx;
    Ok((my - b * mx, b))
}

/// `max(obs, pred) / min(obs, pred) · ln(|obs − pred| + 1)`; `None` unless both are positive and finite.
pub fn outlier_score(obs: f64, pred: f64) -> Option<f64> {
    if !(obs > 0.0 && pred > 0.0 && obs.is_finite() && pred.is_finite()) {
        return None;
    }
    Some(obs.max(pred) / obs.min(pred) * (obs - pred).abs().ln_1p())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OddballScores {
    /// `per_relationship[r][v]`.
    pub per_relationship: Vec<Vec<f64>>,
    pub total: Vec<f64>,
    /// `(ln a, b)` per relationship, `None` when the fit failed.
    pub fits: Vec<Option<(f64, f64)>>,
    /// Nodes given a zero score per relationship because obs or pred was not positive.
    pub skipped: Vec<usize>,
}

pub fn oddball_scores(g: &WeightedDigraph) -> OddballScores {
    let summaries = egonet_summaries(g);
    let pairs: Vec<[(f64, f64); 9]> = summaries.iter().map(EgonetSummary::pairs).collect();
    let n = g.node_count();
    let mut out = OddballScores { per_relationship: Vec::new(), total: vec![0.0; n], fits: Vec::new(), skipped: Vec::new() };
    for r in 0..RELATIONSHIPS.len() {
        let points: Vec<(f64, f64)> = pairs.iter().map(|p| p[r]).collect();
        let fit = powerlaw_fit(&points).ok();
        let mut scores = vec![0.0; n];
        let mut skipped = 0;
        match fit {
            Some((ln_a, b)) => {
                for (s, &(x, y)) in scores.iter_mut().zip(&points) {
                    let pred = if x > 0.0 { (ln_a + b * x.ln()).exp() } else { 0.0 };
                    match outlier_score(y, pred) {
                        Some(v) => *s = v,
                        None => skipped += 1,
                    }
                }
            }
            None => skipped = n,
        }
        for (t, s) in out.total.iter_mut().zip(&scores) {
            *t += s;
        }
        out.per_relationship.push(scores);
        out.fits.push(fit);
        out.skipped.push(skipped);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;
    use proptest::prelude::*;
    use rand::Rng;
    use std::collections::BTreeSet;

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> WeightedDigraph {
        WeightedDigraph::new(n, edges.iter().map(|&(a, b, w)| Edge::new(a, b, w)).collect()).unwrap()
    }

    /// Snowball sample by set operations over the raw edge list.
    fn oracle(g: &WeightedDigraph, v: usize) -> EgonetSummary {
        let mut ego: BTreeSet<usize> = BTreeSet::from([v]);
        for e in g.edges() {
            if e.src == v {
                ego.insert(e.dst);
            }
            if e.dst == v {
                ego.insert(e.src);
            }
        }
        let mut s = EgonetSummary { nodes: ego.len(), ..Default::default() };
        for e in g.edges() {
            let (a, b) = (ego.contains(&e.src), ego.contains(&e.dst));
            if a && b {
                s.edges += 1;
                s.weight += e.weight;
                s.max_weight = s.max_weight.max(e.weight);
            } else if a {
                s.boundary_out_degree += 1;
                s.boundary_out_weight += e.weight;
            } else if b {
                s.boundary_in_degree += 1;
                s.boundary_in_weight += e.weight;
            }
            if e.dst == v {
                s.ego_in_degree += 1;
                s.ego_in_weight += e.weight;
                s.ego_max_in_weight = s.ego_max_in_weight.max(e.weight);
            }
            if e.src == v {
                s.ego_out_degree += 1;
                s.ego_out_weight += e.weight;
                s.ego_max_out_weight = s.ego_max_out_weight.max(e.weight);
            }
        }
        s
    }

    fn close(a: &EgonetSummary, b: &EgonetSummary) -> bool {
        a.pairs().iter().zip(b.pairs().iter()).all(|(p, q)| (p.0 - q.0).abs() < 1e-9 && (p.1 - q.1).abs() < 1e-9)
            && a.boundary_in_degree == b.boundary_in_degree
    }

    #[test]
    fn isolated_node() {
        let g = graph(3, &[(1, 2, 1.0)]);
        let s = &egonet_summaries(&g)[0];
        assert_eq!((s.nodes, s.edges), (1, 0));
    }

    #[test]
    fn star_centre() {
        let k = 6;
        let edges: Vec<_> = (1..=k).map(|i| (0, i, 1.0)).collect();
        let s = &egonet_summaries(&graph(k + 1, &edges))[0];
        assert_eq!((s.nodes, s.edges, s.weight), (k + 1, k, k as f64));
    }

    #[test]
    fn clique_of_five() {
        let mut edges = Vec::new();
        for a in 0..5 {
            for b in 0..5 {
                if a != b {
                    edges.push((a, b, 1.0));
                }
            }
        }
        edges.push((4, 5, 2.0));
        let g = graph(6, &edges);
        let s = egonet_summaries(&g);
        for v in 0..5 {
            assert_eq!(s[v].nodes, if v == 4 { 6 } else { 5 });
            assert!(close(&s[v], &oracle(&g, v)));
        }
        assert_eq!(s[0].edges, 20);
        assert_eq!((s[0].boundary_out_degree, s[0].boundary_out_weight), (1, 2.0));
    }

    #[test]
    fn exact_powerlaw_fit() {
        let pts: Vec<(f64, f64)> = (1..20).map(|i| (i as f64, 2.0 * (i as f64).powf(1.5))).collect();
        let (a, b) = powerlaw_fit(&pts).unwrap();
        assert!((a - 2f64.ln()).abs() < 1e-9);
        assert!((b - 1.5).abs() < 1e-9);
    }

    #[test]
    fn two_points_interpolate() {
        let (a, b) = powerlaw_fit(&[(1.0, 3.0), (4.0, 12.0), (0.0, 5.0), (2.0, -1.0)]).unwrap();
        assert!((a - 3f64.ln()).abs() < 1e-12);
        assert!((b - 1.0).abs() < 1e-12);
        assert_eq!(powerlaw_fit(&[(1.0, 3.0), (1.0, 5.0)]), Err(FitError::TooFewPoints(2)));
        assert_eq!(powerlaw_fit(&[(1.0, 3.0), (0.0, 5.0)]), Err(FitError::TooFewPoints(1)));
    }

    #[test]
    fn noisy_powerlaw_recovers_exponent() {
        let mut rng = crate::seed::rng(17);
        let pts: Vec<(f64, f64)> = (0..1000)
            .map(|_| {
                let x: f64 = rng.gen_range(1.0..100.0);
                let noise: f64 = rng.gen_range(-0.3..0.3);
                (x, 0.5 * x.powf(1.2) * noise.exp())
            })
            .collect();
        let (_, b) = powerlaw_fit(&pts).unwrap();
        assert!((b - 1.2).abs() < 0.05, "{b}");
    }

    #[test]
    fn score_formula() {
        assert_eq!(outlier_score(3.7, 3.7), Some(0.0));
        assert!((outlier_score(2.0, 1.0).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!((outlier_score(2.0, 1.0).unwrap() - 1.386).abs() < 1e-3);
        assert_eq!(outlier_score(0.0, 1.0), None);
        assert_eq!(outlier_score(1.0, 0.0), None);
    }

    #[test]
    fn empty_graph_scores_zero() {
        let s = oddball_scores(&graph(4, &[]));
        assert!(s.total.iter().all(|&t| t == 0.0));
        assert!(s.fits.iter().all(Option::is_none));
    }

    proptest! {
        #[test]
        fn summaries_match_oracle(n in 1usize..12, raw in prop::collection::vec((0usize..12, 0usize..12, 1u32..8), 0..40)) {
            let edges: Vec<(usize, usize, f64)> =
                raw.into_iter().map(|(a, b, w)| (a % n, b % n, w as f64)).filter(|e| e.0 != e.1).collect();
            let g = graph(n, &edges);
            for (v, s) in egonet_summaries(&g).iter().enumerate() {
                prop_assert!(close(s, &oracle(&g, v)));
            }
        }

        #[test]
        fn total_is_sum_and_nonnegative(n in 3usize..30, raw in prop::collection::vec((0usize..30, 0usize..30, 1u32..8), 1..120)) {
            let edges: Vec<(usize, usize, f64)> =
                raw.into_iter().map(|(a, b, w)| (a % n, b % n, w as f64 / 2.0)).filter(|e| e.0 != e.1).collect();
            let s = oddball_scores(&graph(n, &edges));
            for v in 0..n {
                let sum: f64 = s.per_relationship.iter().map(|r| r[v]).sum();
                prop_assert_eq!(sum, s.total[v]);
                prop_assert!(s.per_relationship.iter().all(|r| r[v] >= 0.0));
            }
        }
    }
}
