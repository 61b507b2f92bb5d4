//! Weighted directed graphs with dense node ids, edge-list I/O and ground truth.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use thiserror::Error;

/// Errors raised while building or reading graphs.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("edge {src}->{dst}: weight {weight} is not strictly positive and finite")]
    InvalidWeight { src: String, dst: String, weight: f64 },
    #[error("self-loop on node {0} is not permitted")]
    SelfLoop(String),
    #[error("edge endpoint {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("empty graph")]
    Empty,
    #[error("unknown node label {0:?} in ground truth")]
    UnknownNode(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A directed edge with a strictly positive weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(src: usize, dst: usize, weight: f64) -> Self {
        Self { src, dst, weight }
    }
}

/// How parallel edges are merged when collapsing to a simple digraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Collapse {
    Sum,
    Max,
}

/// Directed multigraph on nodes `0..n` with positive weights.
///
/// Parallel edges are stored explicitly; self-loops are rejected unless the
/// graph was built with [`WeightedDigraph::with_self_loops`].
#[derive(Debug, Clone)]
pub struct WeightedDigraph {
    n: usize,
    edges: Vec<Edge>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
    labels: Vec<String>,
}

/// In-, out- and total strength of every node.
#[derive(Debug, Clone, PartialEq)]
pub struct Strengths {
    pub inn: Vec<f64>,
    pub out: Vec<f64>,
    pub total: Vec<f64>,
}

impl WeightedDigraph {
    /// Graph on `n` nodes labelled `"0".."n-1"`; self-loops are rejected.
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self, GraphError> {
        Self::build(n, edges, None, false)
    }

    /// Same as [`new`](Self::new) but keeps self-loops.
    pub fn with_self_loops(n: usize, edges: Vec<Edge>) -> Result<Self, GraphError> {
        Self::build(n, edges, None, true)
    }

    /// Graph with explicit node labels, one per node.
    pub fn with_labels(labels: Vec<String>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let n = labels.len();
        Self::build(n, edges, Some(labels), false)
    }

    /// The graph with no nodes, produced when a replica cleanup removes everything.
    pub fn empty() -> Self {
        Self { n: 0, edges: Vec::new(), out_adj: Vec::new(), in_adj: Vec::new(), labels: Vec::new() }
    }

    fn build(
        n: usize,
        edges: Vec<Edge>,
        labels: Option<Vec<String>>,
        allow_self_loops: bool,
    ) -> Result<Self, GraphError> {
        let labels = labels.unwrap_or_else(|| (0..n).map(|i| i.to_string()).collect());
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for (idx, e) in edges.iter().enumerate() {
            for node in [e.src, e.dst] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(GraphError::InvalidWeight {
                    src: labels[e.src].clone(),
                    dst: labels[e.dst].clone(),
                    weight: e.weight,
                });
            }
            if e.src == e.dst && !allow_self_loops {
                return Err(GraphError::SelfLoop(labels[e.src].clone()));
            }
            out_adj[e.src].push(idx);
            in_adj[e.dst].push(idx);
        }
        Ok(Self { n, edges, out_adj, in_adj, labels })
    }

    /// Replaces the node labels; `labels` must have one entry per node.
    pub fn relabelled(mut self, labels: &[String]) -> Self {
        assert_eq!(labels.len(), self.n, "one label per node");
        self.labels = labels.to_vec();
        self
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn out_edges(&self, v: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.out_adj[v].iter().map(move |&i| &self.edges[i])
    }

    pub fn in_edges(&self, v: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.in_adj[v].iter().map(move |&i| &self.edges[i])
    }

    /// Edge indices leaving `v`.
    pub fn out_edge_ids(&self, v: usize) -> &[usize] {
        &self.out_adj[v]
    }

    /// Edge indices entering `v`.
    pub fn in_edge_ids(&self, v: usize) -> &[usize] {
        &self.in_adj[v]
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out_adj[v].len()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.in_adj[v].len()
    }

    /// In-degree plus out-degree, parallel edges counted separately.
    pub fn degree(&self, v: usize) -> usize {
        self.out_adj[v].len() + self.in_adj[v].len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    pub fn strengths(&self) -> Strengths {
        let mut inn = vec![0.0; self.n];
        let mut out = vec![0.0; self.n];
        for e in &self.edges {
            out[e.src] += e.weight;
            inn[e.dst] += e.weight;
        }
        let total = inn.iter().zip(&out).map(|(a, b)| a + b).collect();
        Strengths { inn, out, total }
    }

    /// Type-7 (linear interpolation) percentile of the edge weights, `q` in `[0, 1]`.
    pub fn weight_percentile(&self, q: f64) -> Option<f64> {
        let mut w = self.weights();
        w.sort_by(f64::total_cmp);
        crate::stats::percentile_sorted(&w, q)
    }

    /// Symmetric weights `W + Wᵀ` with parallel edges summed.
    pub fn symmetrise(&self) -> SymmetricWeights {
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); self.n];
        for e in &self.edges {
            *rows[e.src].entry(e.dst).or_insert(0.0) += e.weight;
            *rows[e.dst].entry(e.src).or_insert(0.0) += e.weight;
        }
        SymmetricWeights { rows: rows.into_iter().map(|r| r.into_iter().collect()).collect() }
    }

    /// Simple digraph in which each set of parallel edges is merged by `rule`,
    /// as a map from `(src, dst)` to weight.
    pub fn collapsed(&self, rule: Collapse) -> HashMap<(usize, usize), f64> {
        let mut map: HashMap<(usize, usize), f64> = HashMap::with_capacity(self.edges.len());
        for e in &self.edges {
            map.entry((e.src, e.dst))
                .and_modify(|w| match rule {
                    Collapse::Sum => *w += e.weight,
                    Collapse::Max => *w = w.max(e.weight),
                })
                .or_insert(e.weight);
        }
        map
    }

    /// Subgraph induced by `nodes`, relabelled to `0..nodes.len()` in the given order.
    /// Labels are carried over.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> WeightedDigraph {
        let mut local = vec![usize::MAX; self.n];
        for (i, &v) in nodes.iter().enumerate() {
            local[v] = i;
        }
        let mut edges = Vec::new();
        for &v in nodes {
            for e in self.out_edges(v) {
                let d = local[e.dst];
                if d != usize::MAX {
                    edges.push(Edge::new(local[v], d, e.weight));
                }
            }
        }
        let labels = nodes.iter().map(|&v| self.labels[v].clone()).collect();
        Self::build(nodes.len(), edges, Some(labels), true).expect("induced edges are valid")
    }

    /// Directed edge density: edges over `n(n-1)`, parallel edges merged.
    pub fn density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let distinct = self.collapsed(Collapse::Sum).len();
        distinct as f64 / (self.n as f64 * (self.n as f64 - 1.0))
    }
}

/// Sparse symmetric weight matrix, rows sorted by column.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricWeights {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SymmetricWeights {
    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.rows[i].binary_search_by_key(&j, |&(c, _)| c) {
            Ok(k) => self.rows[i][k].1,
            Err(_) => 0.0,
        }
    }

    /// Row sums.
    pub fn degrees(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&(_, w)| w).sum()).collect()
    }
}

/// Options for [`load_edge_list`].
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub allow_self_loops: bool,
}

/// Reads `src,dst,weight` lines. Blank lines and lines starting with `#` are
/// skipped, as is a literal `src,dst,weight` header. Node labels are assigned
/// dense ids in order of first appearance.
pub fn load_edge_list<R: BufRead>(reader: R, opts: LoadOptions) -> Result<WeightedDigraph, GraphError> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges = Vec::new();
    let mut intern = |s: &str, labels: &mut Vec<String>| -> usize {
        if let Some(&id) = ids.get(s) {
            return id;
        }
        let id = labels.len();
        ids.insert(s.to_string(), id);
        labels.push(s.to_string());
        id
    };
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t == "src,dst,weight" {
            continue;
        }
        let parts: Vec<&str> = t.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(GraphError::Parse { line: lineno, msg: format!("expected 3 fields, found {}", parts.len()) });
        }
        if parts[0].is_empty() || parts[1].is_empty() {
            return Err(GraphError::Parse { line: lineno, msg: "empty node label".into() });
        }
        let weight: f64 = parts[2]
            .parse()
            .map_err(|_| GraphError::Parse { line: lineno, msg: format!("invalid weight {:?}", parts[2]) })?;
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(GraphError::InvalidWeight { src: parts[0].into(), dst: parts[1].into(), weight });
        }
        if parts[0] == parts[1] && !opts.allow_self_loops {
            return Err(GraphError::SelfLoop(parts[0].into()));
        }
        let s = intern(parts[0], &mut labels);
        let d = intern(parts[1], &mut labels);
        edges.push(Edge::new(s, d, weight));
    }
    if edges.is_empty() {
        return Err(GraphError::Empty);
    }
    let n = labels.len();
    WeightedDigraph::build(n, edges, Some(labels), opts.allow_self_loops)
}

/// Writes the edge list with a header, using node labels and shortest
/// round-trip weight formatting.
pub fn write_edge_list<W: Write>(g: &WeightedDigraph, mut w: W) -> std::io::Result<()> {
    let mut buf = String::with_capacity(g.edge_count() * 24 + 16);
    buf.push_str("src,dst,weight\n");
    for e in g.edges() {
        let _ = writeln!(buf, "{},{},{}", g.label(e.src), g.label(e.dst), e.weight);
    }
    w.write_all(buf.as_bytes())
}

/// Kinds of planted structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StructureKind {
    Path,
    Ring,
    Star,
    Clique,
    Tree,
}

impl StructureKind {
    pub const ALL: [StructureKind; 5] =
        [StructureKind::Path, StructureKind::Ring, StructureKind::Star, StructureKind::Clique, StructureKind::Tree];

    pub fn name(self) -> &'static str {
        match self {
            StructureKind::Path => "path",
            StructureKind::Ring => "ring",
            StructureKind::Star => "star",
            StructureKind::Clique => "clique",
            StructureKind::Tree => "tree",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// One planted structure: its kind and member nodes in planting order.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedStructure {
    pub kind: StructureKind,
    pub nodes: Vec<usize>,
}

/// Per-node anomaly labels plus the structures that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub anomalous: Vec<bool>,
    pub structures: Vec<PlantedStructure>,
}

impl GroundTruth {
    pub fn new(n: usize) -> Self {
        Self { anomalous: vec![false; n], structures: Vec::new() }
    }

    pub fn add(&mut self, s: PlantedStructure) {
        for &v in &s.nodes {
            self.anomalous[v] = true;
        }
        self.structures.push(s);
    }

    pub fn anomalous_count(&self) -> usize {
        self.anomalous.iter().filter(|&&a| a).count()
    }

    /// Writes `node,label` rows followed by `#structure,<kind>,<m1;m2;...>` lines.
    pub fn write<W: Write>(&self, g: &WeightedDigraph, mut w: W) -> std::io::Result<()> {
        let mut buf = String::from("node,label\n");
        for (v, &a) in self.anomalous.iter().enumerate() {
            let _ = writeln!(buf, "{},{}", g.label(v), u8::from(a));
        }
        for s in &self.structures {
            let members: Vec<&str> = s.nodes.iter().map(|&v| g.label(v)).collect();
            let _ = writeln!(buf, "#structure,{},{}", s.kind.name(), members.join(";"));
        }
        w.write_all(buf.as_bytes())
    }

    /// Reads the format produced by [`write`](Self::write), resolving labels against `g`.
    /// Nodes absent from the file are normal.
    pub fn read<R: BufRead>(reader: R, g: &WeightedDigraph) -> Result<Self, GraphError> {
        let ids: HashMap<&str, usize> = g.labels().iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let resolve = |s: &str| ids.get(s).copied().ok_or_else(|| GraphError::UnknownNode(s.to_string()));
        let mut truth = GroundTruth::new(g.node_count());
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let t = line.trim();
            if let Some(rest) = t.strip_prefix("#structure,") {
                let (kind, members) = rest
                    .split_once(',')
                    .ok_or_else(|| GraphError::Parse { line: lineno, msg: "malformed structure line".into() })?;
                let kind = StructureKind::parse(kind)
                    .ok_or_else(|| GraphError::Parse { line: lineno, msg: format!("unknown structure {kind:?}") })?;
                let nodes = members.split(';').map(resolve).collect::<Result<Vec<_>, _>>()?;
                truth.structures.push(PlantedStructure { kind, nodes });
                continue;
            }
            if t.is_empty() || t.starts_with('#') || t == "node,label" {
                continue;
            }
            let (node, label) = t
                .split_once(',')
                .ok_or_else(|| GraphError::Parse { line: lineno, msg: "expected node,label".into() })?;
            let v = resolve(node.trim())?;
            truth.anomalous[v] = match label.trim() {
                "1" => true,
                "0" => false,
                other => return Err(GraphError::Parse { line: lineno, msg: format!("label {other:?} is not 0 or 1") }),
            };
        }
        Ok(truth)
    }
}
