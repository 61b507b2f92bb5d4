//! The 140-column feature matrix, the plain feature sum, and the random-forest
//! combination with rank-based feature selection.

pub mod forest;
pub mod select;

use std::io::{BufRead, Write};

use thiserror::Error;

pub use forest::{train_forest, ForestConfig, RegressionForest};
pub use select::{average_ranks, rank_curve, ranks_worst_tie, select_features};

use crate::spectral::localisation::COLUMN_SLUGS;
use crate::spectral::Operator;

/// Total feature columns.
pub const FEATURE_COUNT: usize = 140;

#[derive(Debug, Error)]
pub enum CombineError {
    #[error("feature matrix: {0}")]
    Matrix(String),
    #[error("missing feature columns: {}", .0.join(", "))]
    SchemaMismatch(Vec<String>),
    #[error("training data: {0}")]
    Training(String),
    #[error("forest file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// The 140 column names in feature order.
pub fn feature_names() -> Vec<String> {
    let mut v: Vec<String> = [
        "std_degree",
        "comm_density_full",
        "comm_density_avg",
        "comm_gaw_full",
        "comm_gaw_avg",
        "gaw",
        "gaw_top10",
        "gaw_top20",
        "comm_density_config",
        "small_comm_flag",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    v.extend(crate::pathfinder::column_names());
    v.extend(crate::netemd::column_names());
    for op in Operator::ALL {
        v.extend(COLUMN_SLUGS.iter().map(|s| format!("{}_{s}", op.slug())));
    }
    v
}

/// Node-by-feature matrix with named columns and labelled rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    names: Vec<String>,
    labels: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    /// All-zero matrix with the full 140-column schema.
    pub fn zeros(labels: Vec<String>) -> Self {
        let names = feature_names();
        let rows = vec![vec![0.0; names.len()]; labels.len()];
        Self { names, labels, rows }
    }

    /// Matrix with an arbitrary schema.
    pub fn from_rows(names: Vec<String>, labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, CombineError> {
        if labels.len() != rows.len() {
            return Err(CombineError::Matrix(format!("{} labels for {} rows", labels.len(), rows.len())));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != names.len()) {
            return Err(CombineError::Matrix(format!("row {i} has {} values, expected {}", r.len(), names.len())));
        }
        if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.iter().any(|x| !x.is_finite())) {
            return Err(CombineError::Matrix(format!("row {i} has a non-finite value")));
        }
        Ok(Self { names, labels, rows })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn node_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Writes `values` into column `col`.
    pub fn set_column(&mut self, col: usize, values: &[f64]) {
        assert_eq!(values.len(), self.rows.len(), "one value per node");
        for (r, &x) in self.rows.iter_mut().zip(values) {
            r[col] = x;
        }
    }

    /// Writes a block of columns starting at `start`; `block[v]` is node `v`'s slice.
    pub fn set_block(&mut self, start: usize, block: &[Vec<f64>]) {
        assert_eq!(block.len(), self.rows.len(), "one row per node");
        for (r, b) in self.rows.iter_mut().zip(block) {
            r[start..start + b.len()].copy_from_slice(b);
        }
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[col]).collect()
    }

    /// Rows restricted to `names`, in that order; errors list every missing name.
    pub fn select(&self, names: &[String]) -> Result<Vec<Vec<f64>>, CombineError> {
        let missing: Vec<String> = names.iter().filter(|n| self.column_index(n).is_none()).cloned().collect();
        if !missing.is_empty() {
            return Err(CombineError::SchemaMismatch(missing));
        }
        let idx: Vec<usize> = names.iter().map(|n| self.column_index(n).expect("checked")).collect();
        Ok(self.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect())
    }

    /// Stacks matrices with identical schemas.
    pub fn concat(parts: &[FeatureMatrix]) -> Result<Self, CombineError> {
        let Some(first) = parts.first() else {
            return Err(CombineError::Matrix("nothing to concatenate".into()));
        };
        let mut out = Self { names: first.names.clone(), labels: Vec::new(), rows: Vec::new() };
        for p in parts {
            if p.names != out.names {
                return Err(CombineError::Matrix("column schemas differ".into()));
            }
            out.labels.extend(p.labels.iter().cloned());
            out.rows.extend(p.rows.iter().cloned());
        }
        Ok(out)
    }

    /// CSV with a `node` column followed by the feature names.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "node,{}", self.names.join(","))?;
        for (l, r) in self.labels.iter().zip(&self.rows) {
            let vals: Vec<String> = r.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{l},{}", vals.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, CombineError> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| CombineError::Matrix("empty file".into()))??;
        let mut cols = header.trim().split(',');
        if cols.next() != Some("node") {
            return Err(CombineError::Matrix("header must start with `node`".into()));
        }
        let names: Vec<String> = cols.map(str::to_string).collect();
        let (mut labels, mut rows) = (Vec::new(), Vec::new());
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.trim().split(',');
            labels.push(parts.next().unwrap_or_default().to_string());
            let row = parts
                .map(|s| s.parse::<f64>().map_err(|e| CombineError::Matrix(format!("line {}: {e}", i + 2))))
                .collect::<Result<Vec<f64>, _>>()?;
            rows.push(row);
        }
        Self::from_rows(names, labels, rows)
    }
}

/// Row sums over every column.
pub fn feature_sum(m: &FeatureMatrix) -> Vec<f64> {
    m.rows().iter().map(|r| r.iter().sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn schema_has_140_unique_names() {
        let n = feature_names();
        assert_eq!(n.len(), FEATURE_COUNT);
        let set: std::collections::HashSet<_> = n.iter().collect();
        assert_eq!(set.len(), FEATURE_COUNT);
        assert_eq!(n[10], "path_3");
        assert_eq!(n[39], "path_32");
        assert_eq!(n[40], "motif_1_score1");
        assert_eq!(n[80], "adj_upper_ipr_norm1");
        assert_eq!(n[139], "rw_lap_abs_eigvec");
    }

    #[test]
    fn sum_examples() {
        let mut m = FeatureMatrix::zeros(vec!["a".into(), "b".into()]);
        assert_eq!(feature_sum(&m), vec![0.0, 0.0]);
        m.set_column(17, &[0.0, 2.3]);
        assert_eq!(feature_sum(&m), vec![0.0, 2.3]);
    }

    #[test]
    fn csv_round_trip() {
        let mut m = FeatureMatrix::zeros(vec!["x".into(), "y".into()]);
        m.set_column(0, &[1.5, -0.25]);
        m.set_column(139, &[3.0, 1e-17]);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(FeatureMatrix::read_csv(&buf[..]).unwrap(), m);
    }

    #[test]
    fn select_reports_missing() {
        let m = FeatureMatrix::zeros(vec!["x".into()]);
        let err = m.select(&["gaw".into(), "nope".into(), "also_nope".into()]).unwrap_err();
        assert_eq!(err.to_string(), "missing feature columns: nope, also_nope");
    }

    proptest! {
        #[test]
        fn sum_is_additive_and_permutes(rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 6), 1..10), split in 0usize..6) {
            let names: Vec<String> = (0..6).map(|i| format!("f{i}")).collect();
            let labels: Vec<String> = (0..rows.len()).map(|i| i.to_string()).collect();
            let m = FeatureMatrix::from_rows(names, labels.clone(), rows.clone()).unwrap();
            let total = feature_sum(&m);
            for (r, t) in rows.iter().zip(&total) {
                let parts: f64 = r[..split].iter().sum::<f64>() + r[split..].iter().sum::<f64>();
                prop_assert!((parts - t).abs() < 1e-9);
            }
            let mut rev = rows.clone();
            rev.reverse();
            let mr = FeatureMatrix::from_rows(m.names().to_vec(), labels, rev).unwrap();
            let mut back = feature_sum(&mr);
            back.reverse();
            prop_assert_eq!(back, total);
        }
    }
}
