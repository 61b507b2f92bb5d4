//! Weighted directed configuration-model replicas and replica ensembles.

use std::fs;
use std::io::BufReader;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{load_edge_list, write_edge_list, Edge, GraphError, LoadOptions, WeightedDigraph};
use crate::seed;

#[derive(Debug, Error)]
pub enum NullModelError {
    #[error("no replica met the size requirement of {required} nodes within {attempts} attempts")]
    AttemptsExhausted { required: usize, attempts: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Stub matching before cleanup: shuffled in-stubs paired with out-stubs in
/// node order, carrying shuffled weights. Node ids are those of `g`.
pub fn stub_matching(g: &WeightedDigraph, rng: &mut seed::Rng) -> Vec<Edge> {
    let mut out_stubs = Vec::with_capacity(g.edge_count());
    let mut in_stubs = Vec::with_capacity(g.edge_count());
    for v in 0..g.node_count() {
        out_stubs.extend(std::iter::repeat(v).take(g.out_degree(v)));
        in_stubs.extend(std::iter::repeat(v).take(g.in_degree(v)));
    }
    let mut weights = g.weights();
    in_stubs.shuffle(rng);
    weights.shuffle(rng);
    out_stubs
        .into_iter()
        .zip(in_stubs)
        .zip(weights)
        .map(|((s, d), w)| Edge::new(s, d, w))
        .collect()
}

/// Drops self-loops, keeps one uniformly chosen copy of each multi-edge and
/// removes nodes left with no edges. Surviving nodes keep their relative order
/// and labels.
pub fn cleanup(g: &WeightedDigraph, mut edges: Vec<Edge>, rng: &mut seed::Rng) -> WeightedDigraph {
    edges.retain(|e| e.src != e.dst);
    edges.sort_by_key(|e| (e.src, e.dst));
    let mut kept = Vec::with_capacity(edges.len());
    let mut i = 0;
    while i < edges.len() {
        let mut j = i + 1;
        while j < edges.len() && edges[j].src == edges[i].src && edges[j].dst == edges[i].dst {
            j += 1;
        }
        let pick = if j - i > 1 { i + rng.gen_range(0..j - i) } else { i };
        kept.push(edges[pick]);
        i = j;
    }
    let mut used = vec![false; g.node_count()];
    for e in &kept {
        used[e.src] = true;
        used[e.dst] = true;
    }
    let mut local = vec![usize::MAX; g.node_count()];
    let mut labels = Vec::new();
    for v in 0..g.node_count() {
        if used[v] {
            local[v] = labels.len();
            labels.push(g.label(v).to_string());
        }
    }
    if labels.is_empty() {
        return WeightedDigraph::empty();
    }
    let kept = kept.into_iter().map(|e| Edge::new(local[e.src], local[e.dst], e.weight)).collect();
    WeightedDigraph::with_labels(labels, kept).expect("cleaned replica is a valid graph")
}

/// One configuration-model replica of `g`, fully determined by `seed`.
pub fn configuration_replica(g: &WeightedDigraph, seed: u64) -> WeightedDigraph {
    let mut rng = seed::rng(seed);
    let edges = stub_matching(g, &mut rng);
    cleanup(g, edges, &mut rng)
}

/// What happens after the fallback attempt has also failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfterFallback {
    /// Keep drawing until a replica meets the full requirement.
    RequireFull,
    /// Accept the first later replica meeting the fallback size.
    AcceptFallback,
}

/// Size requirement for resampled replicas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResamplePolicy {
    pub required_nodes: usize,
    pub fallback_attempt: usize,
    pub fallback_min_nodes: usize,
    pub after_fallback: AfterFallback,
    pub max_attempts: usize,
}

impl ResamplePolicy {
    /// Localisation tests: enough nodes for `min_eigvecs` usable eigenvectors
    /// once `trivial` are excluded; the 10th draw is kept if it has more than 2 nodes.
    pub fn localisation(min_eigvecs: usize, trivial: usize) -> Self {
        let required = min_eigvecs + trivial;
        Self {
            required_nodes: required,
            fallback_attempt: 10,
            fallback_min_nodes: required.min(3),
            after_fallback: AfterFallback::RequireFull,
            max_attempts: 10_000,
        }
    }

    /// Distance-based tests: at least `required` nodes within 10 draws, then
    /// the next replica with more than 3 nodes.
    pub fn netemd(required: usize) -> Self {
        Self {
            required_nodes: required,
            fallback_attempt: 10,
            fallback_min_nodes: required.min(4),
            after_fallback: AfterFallback::AcceptFallback,
            max_attempts: 10_000,
        }
    }
}

/// Draws replicas from `generate(attempt)` (attempts count from 1) until one
/// satisfies `policy`. Returns the replica and the attempt that produced it.
pub fn resample_with<F>(policy: &ResamplePolicy, mut generate: F) -> Result<(WeightedDigraph, usize), NullModelError>
where
    F: FnMut(usize) -> WeightedDigraph,
{
    for attempt in 1..=policy.max_attempts {
        let r = generate(attempt);
        let n = r.node_count();
        let accept = n >= policy.required_nodes
            || (attempt == policy.fallback_attempt && n >= policy.fallback_min_nodes)
            || (attempt > policy.fallback_attempt
                && policy.after_fallback == AfterFallback::AcceptFallback
                && n >= policy.fallback_min_nodes);
        if accept {
            return Ok((r, attempt));
        }
    }
    Err(NullModelError::AttemptsExhausted { required: policy.required_nodes, attempts: policy.max_attempts })
}

/// Configuration replica with at least `min_eigvecs` usable eigenvectors
/// (node count minus `trivial`), under the localisation resampling rule.
pub fn resample_replica_with_min_size(
    g: &WeightedDigraph,
    min_eigvecs: usize,
    trivial: usize,
    seed: u64,
) -> Result<WeightedDigraph, NullModelError> {
    let policy = ResamplePolicy::localisation(min_eigvecs, trivial);
    resample_with(&policy, |attempt| configuration_replica(g, seed::derive(seed, &[attempt as u64])))
        .map(|(r, _)| r)
}

/// A set of replicas with the seeds that produced them.
#[derive(Debug, Clone)]
pub struct NullEnsemble {
    pub replicas: Vec<WeightedDigraph>,
    pub seeds: Vec<u64>,
    /// Replicas dropped because resampling hit its attempt cap.
    pub failures: usize,
}

impl NullEnsemble {
    /// `count` plain replicas; replica `i` uses seed `derive(master, [i])`.
    pub fn build(g: &WeightedDigraph, count: usize, master: u64) -> Self {
        let seeds: Vec<u64> = (0..count as u64).map(|i| seed::derive(master, &[i])).collect();
        let replicas = seeds.par_iter().map(|&s| configuration_replica(g, s)).collect();
        Self { replicas, seeds, failures: 0 }
    }

    /// `count` replicas drawn under `policy`; replicas whose resampling fails are dropped.
    pub fn build_resampled(g: &WeightedDigraph, count: usize, master: u64, policy: &ResamplePolicy) -> Self {
        let results: Vec<(u64, Option<WeightedDigraph>)> = (0..count as u64)
            .into_par_iter()
            .map(|i| {
                let s = seed::derive(master, &[i]);
                let r = resample_with(policy, |a| configuration_replica(g, seed::derive(s, &[a as u64])));
                (s, r.ok().map(|(r, _)| r))
            })
            .collect();
        let mut out = Self { replicas: Vec::with_capacity(count), seeds: Vec::with_capacity(count), failures: 0 };
        for (s, r) in results {
            match r {
                Some(r) => {
                    out.replicas.push(r);
                    out.seeds.push(s);
                }
                None => out.failures += 1,
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.replicas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replicas.is_empty()
    }

    /// Writes one edge list per replica, `replica_00000.csv` onwards, each
    /// starting with a `# seed=` comment.
    pub fn save(&self, dir: &Path) -> Result<(), NullModelError> {
        fs::create_dir_all(dir)?;
        for (i, (r, s)) in self.replicas.iter().zip(&self.seeds).enumerate() {
            let mut buf = format!("# seed={s}\n").into_bytes();
            write_edge_list(r, &mut buf)?;
            fs::write(dir.join(format!("replica_{i:05}.csv")), buf)?;
        }
        Ok(())
    }

    /// Reads an ensemble written by [`save`](Self::save). Empty replicas are not persisted.
    pub fn load(dir: &Path) -> Result<Self, NullModelError> {
        let mut paths: Vec<_> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("replica_")))
            .collect();
        paths.sort();
        let mut out = Self { replicas: Vec::new(), seeds: Vec::new(), failures: 0 };
        for p in paths {
            let text = fs::read_to_string(&p)?;
            let s = text
                .lines()
                .next()
                .and_then(|l| l.strip_prefix("# seed="))
                .and_then(|v| v.trim().parse().ok())
                .unwrap_or(0);
            out.replicas.push(load_edge_list(BufReader::new(text.as_bytes()), LoadOptions::default())?);
            out.seeds.push(s);
        }
        Ok(out)
    }
}
