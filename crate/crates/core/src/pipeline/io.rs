//! CSV readers and writers for scores, labels, metrics, importances and the
//! run manifest.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::{PipelineConfig, PipelineError};
use crate::metrics::{report, Report};

fn input(msg: String) -> PipelineError {
    PipelineError::Input(msg)
}

/// `node,score` rows in the given order.
pub fn write_scores<W: Write>(mut w: W, labels: &[String], scores: &[f64]) -> std::io::Result<()> {
    writeln!(w, "node,score")?;
    for (l, s) in labels.iter().zip(scores) {
        writeln!(w, "{l},{s}")?;
    }
    Ok(())
}

/// Reads `node,score` rows; the header is optional.
pub fn read_scores<R: BufRead>(r: R) -> Result<Vec<(String, f64)>, PipelineError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t == "node,score" {
            continue;
        }
        let (node, score) =
            t.rsplit_once(',').ok_or_else(|| input(format!("scores line {}: expected node,score", i + 1)))?;
        let s: f64 = score.trim().parse().map_err(|_| input(format!("scores line {}: bad score {score:?}", i + 1)))?;
        if s.is_nan() {
            return Err(input(format!("scores line {}: score is NaN", i + 1)));
        }
        out.push((node.trim().to_string(), s));
    }
    Ok(out)
}

/// Reads `node,label` rows with labels 0 or 1; `#` lines (planted structures) are skipped.
pub fn read_labels<R: BufRead>(r: R) -> Result<Vec<(String, bool)>, PipelineError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t == "node,label" {
            continue;
        }
        let (node, label) =
            t.rsplit_once(',').ok_or_else(|| input(format!("labels line {}: expected node,label", i + 1)))?;
        let a = match label.trim() {
            "1" => true,
            "0" => false,
            other => return Err(input(format!("labels line {}: label must be 0 or 1, found {other:?}", i + 1))),
        };
        out.push((node.trim().to_string(), a));
    }
    Ok(out)
}

/// Aligns scores with labels. Every labelled node must be scored; scored
/// nodes without a label count as normal.
pub fn align(scores: &[(String, f64)], labels: &[(String, bool)]) -> Result<(Vec<f64>, Vec<bool>), PipelineError> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, (n, _)) in scores.iter().enumerate() {
        if index.insert(n.as_str(), i).is_some() {
            return Err(input(format!("node {n:?} scored twice")));
        }
    }
    let missing: Vec<&str> = labels.iter().map(|(n, _)| n.as_str()).filter(|n| !index.contains_key(n)).collect();
    if !missing.is_empty() {
        return Err(input(format!("ranking lacks labelled nodes: {}", missing.join(", "))));
    }
    let mut truth = vec![false; scores.len()];
    for (n, a) in labels {
        truth[index[n.as_str()]] |= *a;
    }
    Ok((scores.iter().map(|s| s.1).collect(), truth))
}

pub fn evaluate(scores: &[(String, f64)], labels: &[(String, bool)]) -> Result<Report, PipelineError> {
    let (s, t) = align(scores, labels)?;
    report(&s, &t).map_err(|e| input(e.to_string()))
}

/// `measure,k,value` rows: precision and recall per cutoff, then average precision with an empty `k`.
pub fn write_report<W: Write>(mut w: W, r: &Report) -> std::io::Result<()> {
    writeln!(w, "measure,k,value")?;
    for &(k, p, q) in &r.rows {
        writeln!(w, "precision,{k},{p}")?;
        writeln!(w, "recall,{k},{q}")?;
    }
    writeln!(w, "average_precision,,{}", r.average_precision)
}

pub fn read_report<R: BufRead>(r: R) -> Result<Report, PipelineError> {
    let mut rows: Vec<(usize, f64, f64)> = Vec::new();
    let mut ap = None;
    for (i, line) in r.lines().enumerate().skip(1) {
        let line = line?;
        let parts: Vec<&str> = line.trim().split(',').collect();
        let bad = || input(format!("report line {}: malformed", i + 1));
        if parts.len() != 3 {
            return Err(bad());
        }
        let v: f64 = parts[2].parse().map_err(|_| bad())?;
        match parts[0] {
            "average_precision" => ap = Some(v),
            m @ ("precision" | "recall") => {
                let k: usize = parts[1].parse().map_err(|_| bad())?;
                if rows.last().map_or(true, |r| r.0 != k) {
                    rows.push((k, f64::NAN, f64::NAN));
                }
                let row = rows.last_mut().expect("pushed");
                if m == "precision" {
                    row.1 = v;
                } else {
                    row.2 = v;
                }
            }
            _ => return Err(bad()),
        }
    }
    let average_precision = ap.ok_or_else(|| input("report has no average_precision row".into()))?;
    Ok(Report { rows, average_precision })
}

/// One row per regime: `p,w` followed by an importance per feature.
pub fn write_importances<W: Write>(
    mut w: W,
    names: &[String],
    regimes: &[(f64, f64)],
    importances: &[Vec<f64>],
) -> std::io::Result<()> {
    writeln!(w, "p,w,{}", names.join(","))?;
    for ((p, q), imp) in regimes.iter().zip(importances) {
        let vals: Vec<String> = imp.iter().map(f64::to_string).collect();
        writeln!(w, "{p},{q},{}", vals.join(","))?;
    }
    Ok(())
}

/// Feature names and per-regime importance vectors.
pub fn read_importances<R: BufRead>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>), PipelineError> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| input("importances file is empty".into()))??;
    let names: Vec<String> = header.trim().split(',').skip(2).map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .trim()
            .split(',')
            .skip(2)
            .map(|s| s.parse::<f64>().map_err(|_| input(format!("importances line {}: bad value {s:?}", i + 2))))
            .collect::<Result<Vec<f64>, _>>()?;
        if row.len() != names.len() {
            return Err(input(format!("importances line {}: {} values for {} features", i + 2, row.len(), names.len())));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(input("importances file has no regimes".into()));
    }
    Ok((names, rows))
}

pub fn write_rank_curve<W: Write>(mut w: W, curve: &[(usize, String, f64)]) -> std::io::Result<()> {
    writeln!(w, "position,feature,average_rank")?;
    for (k, f, r) in curve {
        writeln!(w, "{k},{f},{r}")?;
    }
    Ok(())
}

/// JSON manifest holding the full configuration, the crate version, stage
/// timings and free-form details.
pub fn manifest(
    command: &str,
    cfg: &PipelineConfig,
    timings: &[(String, f64)],
    details: serde_json::Value,
) -> serde_json::Value {
    let config: serde_json::Map<String, serde_json::Value> =
        cfg.pairs().into_iter().map(|(k, v)| (k, serde_json::Value::String(v))).collect();
    let timings: serde_json::Map<String, serde_json::Value> =
        timings.iter().map(|(k, v)| (k.clone(), serde_json::json!(v))).collect();
    serde_json::json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "timings_seconds": timings,
        "details": details,
    })
}
