//! Multi-level Louvain modularity optimisation on symmetric weights.

use std::collections::HashMap;

use rand::seq::SliceRandom;

use crate::graph::SymmetricWeights;
use crate::seed;

/// Minimum modularity gain for another pass or level.
const MIN_GAIN: f64 = 1e-7;

/// Node-to-community assignment with communities numbered by first member.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub membership: Vec<usize>,
    pub communities: Vec<Vec<usize>>,
}

impl Partition {
    /// Renumbers arbitrary labels by order of first appearance.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map = HashMap::new();
        let mut communities: Vec<Vec<usize>> = Vec::new();
        let membership = labels
            .iter()
            .enumerate()
            .map(|(v, &l)| {
                let c = *map.entry(l).or_insert_with(|| {
                    communities.push(Vec::new());
                    communities.len() - 1
                });
                communities[c].push(v);
                c
            })
            .collect();
        Self { membership, communities }
    }

    pub fn len(&self) -> usize {
        self.communities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }
}

/// Weighted graph for one Louvain level; `adj[i]` includes self-weight.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    k: Vec<f64>,
    two_m: f64,
}

impl Level {
    fn from_weights(w: &SymmetricWeights) -> Self {
        let adj: Vec<Vec<(usize, f64)>> = (0..w.size()).map(|i| w.row(i).to_vec()).collect();
        Self::from_adj(adj)
    }

    fn from_adj(adj: Vec<Vec<(usize, f64)>>) -> Self {
        let k: Vec<f64> = adj.iter().map(|r| r.iter().map(|&(_, x)| x).sum()).collect();
        let two_m = k.iter().sum();
        Self { adj, k, two_m }
    }

    fn modularity(&self, comm: &[usize], resolution: f64) -> f64 {
        if self.two_m == 0.0 {
            return 0.0;
        }
        let nc = comm.iter().max().map_or(0, |m| m + 1);
        let mut inside = vec![0.0; nc];
        let mut tot = vec![0.0; nc];
        for (i, row) in self.adj.iter().enumerate() {
            tot[comm[i]] += self.k[i];
            for &(j, x) in row {
                if comm[j] == comm[i] {
                    inside[comm[i]] += x;
                }
            }
        }
        inside.iter().zip(&tot).map(|(a, t)| a / self.two_m - resolution * (t / self.two_m).powi(2)).sum()
    }

    /// Local moving until no pass improves modularity by `MIN_GAIN`.
    fn one_level(&self, resolution: f64, rng: &mut seed::Rng) -> Vec<usize> {
        let n = self.adj.len();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = self.k.clone();
        if self.two_m == 0.0 {
            return comm;
        }
        let mut order: Vec<usize> = (0..n).collect();
        let mut links: HashMap<usize, f64> = HashMap::new();
        let mut current = self.modularity(&comm, resolution);
        loop {
            let mut moved = false;
            order.shuffle(rng);
            for &i in &order {
                let ci = comm[i];
                links.clear();
                for &(j, x) in &self.adj[i] {
                    if j != i {
                        *links.entry(comm[j]).or_insert(0.0) += x;
                    }
                }
                let ki = self.k[i];
                let scale = ki / self.two_m;
                tot[ci] -= ki;
                let stay = links.get(&ci).copied().unwrap_or(0.0) - resolution * tot[ci] * scale;
                let mut best = ci;
                let mut best_gain = 0.0;
                let mut cands: Vec<(usize, f64)> = links.iter().map(|(&c, &x)| (c, x)).collect();
                cands.sort_by_key(|&(c, _)| c);
                for (c, kic) in cands {
                    let gain = kic - resolution * tot[c] * scale - stay;
                    if gain > best_gain {
                        best_gain = gain;
                        best = c;
                    }
                }
                tot[best] += ki;
                if best != ci {
                    comm[i] = best;
                    moved = true;
                }
            }
            let next = self.modularity(&comm, resolution);
            if !moved || next - current < MIN_GAIN {
                break;
            }
            current = next;
        }
        comm
    }

    fn aggregate(&self, comm: &[usize]) -> (Level, Vec<usize>) {
        let part = Partition::from_labels(comm);
        let mut rows: Vec<HashMap<usize, f64>> = vec![HashMap::new(); part.len()];
        for (i, row) in self.adj.iter().enumerate() {
            let ci = part.membership[i];
            for &(j, x) in row {
                *rows[ci].entry(part.membership[j]).or_insert(0.0) += x;
            }
        }
        let adj = rows
            .into_iter()
            .map(|r| {
                let mut v: Vec<(usize, f64)> = r.into_iter().collect();
                v.sort_by_key(|&(c, _)| c);
                v
            })
            .collect();
        (Level::from_adj(adj), part.membership)
    }
}

/// Modularity of `membership` on `w` at the given resolution.
pub fn modularity(w: &SymmetricWeights, membership: &[usize], resolution: f64) -> f64 {
    Level::from_weights(w).modularity(membership, resolution)
}

/// Louvain communities of `w`; node order in each pass is shuffled from `seed`.
pub fn louvain(w: &SymmetricWeights, resolution: f64, seed: u64) -> Partition {
    let mut rng = seed::rng(seed);
    let mut level = Level::from_weights(w);
    let mut membership: Vec<usize> = (0..w.size()).collect();
    let mut quality = level.modularity(&membership, resolution);
    loop {
        let comm = level.one_level(resolution, &mut rng);
        let (next, local) = level.aggregate(&comm);
        let next_membership: Vec<usize> = membership.iter().map(|&c| local[c]).collect();
        let q = modularity(w, &next_membership, resolution);
        if next.adj.len() == level.adj.len() || q - quality < MIN_GAIN {
            if q > quality {
                membership = next_membership;
            }
            break;
        }
        membership = next_membership;
        quality = q;
        level = next;
    }
    Partition::from_labels(&membership)
}
