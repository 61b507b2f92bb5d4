//! Regression forest of bootstrap CART trees with variance-reduction splits.

use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CombineError, FeatureMatrix};
use crate::seed;

const FORMAT: &str = "netanom-forest";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub trees: usize,
    pub min_samples_split: usize,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { trees: 10, min_samples_split: 2, bootstrap: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    min_split: usize,
    nodes: Vec<Node>,
    importance: Vec<f64>,
}

impl Builder<'_> {
    /// Best split of `idx` as `(feature, threshold, decrease)`, where the
    /// decrease is the drop in summed squared error.
    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64, f64)> {
        let n = idx.len() as f64;
        let total: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let base = total * total / n;
        let mut best: Option<(usize, f64, f64)> = None;
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(idx.len());
        for f in 0..self.x.first().map_or(0, Vec::len) {
            let first = self.x[idx[0]][f];
            if idx.iter().all(|&i| self.x[i][f] == first) {
                continue;
            }
            pairs.clear();
            pairs.extend(idx.iter().map(|&i| (self.x[i][f], self.y[i])));
            pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = 0.0;
            for k in 0..pairs.len() - 1 {
                left += pairs[k].1;
                if pairs[k].0 == pairs[k + 1].0 {
                    continue;
                }
                let nl = (k + 1) as f64;
                let right = total - left;
                let gain = left * left / nl + right * right / (n - nl) - base;
                if best.map_or(true, |b| gain > b.2) {
                    let mid = 0.5 * (pairs[k].0 + pairs[k + 1].0);
                    let thr = if mid < pairs[k + 1].0 { mid } else { pairs[k].0 };
                    best = Some((f, thr, gain));
                }
            }
        }
        best.filter(|b| b.2 > 0.0)
    }

    fn build(&mut self, idx: Vec<usize>) -> usize {
        let id = self.nodes.len();
        let mean = idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64;
        self.nodes.push(Node::Leaf { value: mean });
        let pure = idx.iter().all(|&i| self.y[i] == self.y[idx[0]]);
        if idx.len() < self.min_split || pure {
            return id;
        }
        let Some((feature, threshold, gain)) = self.best_split(&idx) else { return id };
        self.importance[feature] += gain;
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| self.x[i][feature] <= threshold);
        let left = self.build(l);
        let right = self.build(r);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }
}

/// Normalises to unit sum; all-zero input stays zero.
fn normalise(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
}

fn train_tree(x: &[Vec<f64>], y: &[f64], cfg: &ForestConfig, seed: u64) -> (RegressionTree, Vec<f64>) {
    let n = y.len();
    let idx: Vec<usize> = if cfg.bootstrap {
        let mut rng = seed::rng(seed);
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let features = x.first().map_or(0, Vec::len);
    let mut b = Builder { x, y, min_split: cfg.min_samples_split.max(2), nodes: Vec::new(), importance: vec![0.0; features] };
    b.build(idx);
    normalise(&mut b.importance);
    (RegressionTree { nodes: b.nodes }, b.importance)
}

/// SHA-256 over the newline-joined feature names.
pub fn schema_hash(names: &[String]) -> String {
    format!("{:x}", Sha256::digest(names.join("\n").as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionForest {
    pub format: String,
    pub version: u32,
    pub schema_hash: String,
    pub feature_names: Vec<String>,
    pub trees: Vec<RegressionTree>,
    /// Mean normalised impurity decrease per feature over trees that split.
    pub importance: Vec<f64>,
}

/// Fits `cfg.trees` trees on bootstrap samples of `(x, y)`; tree `t` uses seed `derive(seed, [t])`.
pub fn train_forest(
    x: &[Vec<f64>],
    y: &[f64],
    names: &[String],
    cfg: &ForestConfig,
    seed: u64,
) -> Result<RegressionForest, CombineError> {
    if x.len() != y.len() || y.len() < 2 {
        return Err(CombineError::Training(format!("{} rows for {} targets; need at least 2", x.len(), y.len())));
    }
    if let Some(r) = x.iter().find(|r| r.len() != names.len()) {
        return Err(CombineError::Training(format!("row has {} features, schema has {}", r.len(), names.len())));
    }
    if cfg.trees == 0 {
        return Err(CombineError::Training("tree count must be positive".into()));
    }
    let fitted: Vec<(RegressionTree, Vec<f64>)> =
        (0..cfg.trees).into_par_iter().map(|t| train_tree(x, y, cfg, seed::derive(seed, &[t as u64]))).collect();
    let mut importance = vec![0.0; names.len()];
    let splitting: Vec<&Vec<f64>> = fitted.iter().filter(|(t, _)| t.nodes.len() > 1).map(|(_, i)| i).collect();
    for imp in &splitting {
        for (a, b) in importance.iter_mut().zip(imp.iter()) {
            *a += b / splitting.len() as f64;
        }
    }
    normalise(&mut importance);
    Ok(RegressionForest {
        format: FORMAT.into(),
        version: VERSION,
        schema_hash: schema_hash(names),
        feature_names: names.to_vec(),
        trees: fitted.into_iter().map(|(t, _)| t).collect(),
        importance,
    })
}

impl RegressionForest {
    /// Mean tree output for rows already in the forest's column order.
    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| self.trees.iter().map(|t| t.predict(r)).sum::<f64>() / self.trees.len() as f64).collect()
    }

    /// Scores for every row of `m`, matching columns by name.
    pub fn predict(&self, m: &FeatureMatrix) -> Result<Vec<f64>, CombineError> {
        Ok(self.predict_rows(&m.select(&self.feature_names)?))
    }

    pub fn to_json(&self) -> Result<String, CombineError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, CombineError> {
        let f: Self = serde_json::from_str(s)?;
        if f.format != FORMAT {
            return Err(CombineError::Format(format!("unknown format `{}`", f.format)));
        }
        if f.version != VERSION {
            return Err(CombineError::Format(format!("unsupported version {}", f.version)));
        }
        if f.schema_hash != schema_hash(&f.feature_names) {
            return Err(CombineError::Format("schema hash does not match feature names".into()));
        }
        let width = f.feature_names.len();
        for t in &f.trees {
            for node in &t.nodes {
                if let Node::Split { feature, left, right, .. } = *node {
                    if feature >= width || left >= t.nodes.len() || right >= t.nodes.len() {
                        return Err(CombineError::Format("tree node out of range".into()));
                    }
                }
            }
        }
        Ok(f)
    }

    pub fn save(&self, path: &Path) -> Result<(), CombineError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CombineError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::average_precision;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn all_zero_targets_predict_zero() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let f = train_forest(&x, &[0.0; 20], &names(1), &ForestConfig::default(), 1).unwrap();
        assert!(f.predict_rows(&x).iter().all(|&p| p == 0.0));
        assert_eq!(f.importance, vec![0.0]);
    }

    #[test]
    fn separable_toy_is_perfect() {
        let y: Vec<f64> = (0..60).map(|i| if i % 7 == 0 { 1.0 } else { 0.0 }).collect();
        let x: Vec<Vec<f64>> = y.iter().enumerate().map(|(i, &l)| vec![(i % 5) as f64, l, 3.0]).collect();
        let f = train_forest(&x, &y, &names(3), &ForestConfig::default(), 4).unwrap();
        let pred = f.predict_rows(&x);
        assert_eq!(average_precision(&pred, &y.iter().map(|&v| v == 1.0).collect::<Vec<_>>()).unwrap(), 1.0);
        assert!((f.importance.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(f.importance[1] > 0.99);
        assert_eq!(f.importance[2], 0.0);
    }

    #[test]
    fn predictions_are_tenths() {
        let y: Vec<f64> = (0..200).map(|i| ((i * 31 % 17) < 3) as u8 as f64).collect();
        let x: Vec<Vec<f64>> = (0..200).map(|i| vec![(i * 13 % 29) as f64, (i * 7 % 11) as f64, i as f64]).collect();
        let f = train_forest(&x, &y, &names(3), &ForestConfig::default(), 9).unwrap();
        let probe: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 * 0.6, (i % 11) as f64, 3.7 * i as f64]).collect();
        for p in f.predict_rows(&probe) {
            assert!(((p * 10.0).round() - p * 10.0).abs() < 1e-9 && (0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn json_round_trip_and_schema_errors() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let y: Vec<f64> = (0..30).map(|i| (i > 20) as u8 as f64).collect();
        let f = train_forest(&x, &y, &names(2), &ForestConfig::default(), 2).unwrap();
        let back = RegressionForest::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(back, f);
        let mut bad = f.clone();
        bad.feature_names[0] = "other".into();
        assert!(RegressionForest::from_json(&bad.to_json().unwrap()).is_err());
        let m = FeatureMatrix::from_rows(vec!["f1".into(), "g".into()], vec!["a".into()], vec![vec![0.0, 1.0]]).unwrap();
        let err = f.predict(&m).unwrap_err();
        assert_eq!(err.to_string(), "missing feature columns: f0");
    }

    #[test]
    fn deterministic_per_seed() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i * 17 % 13) as f64, (i % 4) as f64]).collect();
        let y: Vec<f64> = (0..40).map(|i| (i % 5 == 0) as u8 as f64).collect();
        let a = train_forest(&x, &y, &names(2), &ForestConfig::default(), 3).unwrap();
        let b = train_forest(&x, &y, &names(2), &ForestConfig::default(), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn vote_fractions() {
        let leaf = |v| RegressionTree { nodes: vec![Node::Leaf { value: v }] };
        let mut f = RegressionForest {
            format: FORMAT.into(),
            version: VERSION,
            schema_hash: schema_hash(&names(1)),
            feature_names: names(1),
            trees: (0..10).map(|_| leaf(1.0)).collect(),
            importance: vec![0.0],
        };
        assert_eq!(f.predict_rows(&[vec![0.0]]), vec![1.0]);
        f.trees = (0..10).map(|t| leaf(if t < 3 { 1.0 } else { 0.0 })).collect();
        assert!((f.predict_rows(&[vec![0.0]])[0] - 0.3).abs() < 1e-15);
    }
}
