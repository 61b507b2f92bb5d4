//! Tie-aware ranking metrics: precision and recall at a cutoff, and average
//! precision, each averaged over uniformly random orderings of tied scores.

use thiserror::Error;

/// Cutoffs reported by [`report`].
pub const K_GRID: [usize; 11] = [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024];

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("{scores} scores for {truth} labels")]
    LengthMismatch { scores: usize, truth: usize },
    #[error("no anomalies in the ground truth")]
    NoAnomalies,
    #[error("cutoff {k} outside 1..={n}")]
    BadCutoff { k: usize, n: usize },
    #[error("score of node {0} is not a number")]
    NotANumber(usize),
}

/// Tie groups in descending score order as `(size, anomalies)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub groups: Vec<(usize, usize)>,
    pub anomalies: usize,
}

impl Ranking {
    pub fn new(scores: &[f64], truth: &[bool]) -> Result<Self, MetricsError> {
        if scores.len() != truth.len() {
            return Err(MetricsError::LengthMismatch { scores: scores.len(), truth: truth.len() });
        }
        if let Some(i) = scores.iter().position(|s| s.is_nan()) {
            return Err(MetricsError::NotANumber(i));
        }
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        let mut groups: Vec<(usize, usize)> = Vec::new();
        let mut last = None;
        for i in order {
            let hit = truth[i] as usize;
            match (last, groups.last_mut()) {
                (Some(s), Some(g)) if s == scores[i] => {
                    g.0 += 1;
                    g.1 += hit;
                }
                _ => groups.push((1, hit)),
            }
            last = Some(scores[i]);
        }
        let anomalies = truth.iter().filter(|&&t| t).count();
        Ok(Self { groups, anomalies })
    }

    pub fn len(&self) -> usize {
        self.groups.iter().map(|g| g.0).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Expected anomalies among the top `k`.
    pub fn hits_at(&self, k: usize) -> f64 {
        let mut seen = 0;
        let mut hits = 0.0;
        for &(size, a) in &self.groups {
            if seen + size <= k {
                hits += a as f64;
                seen += size;
            } else {
                hits += (k - seen) as f64 * a as f64 / size as f64;
                break;
            }
        }
        hits
    }

    pub fn precision_recall_at(&self, k: usize) -> Result<(f64, f64), MetricsError> {
        let n = self.len();
        if k == 0 || k > n {
            return Err(MetricsError::BadCutoff { k, n });
        }
        if self.anomalies == 0 {
            return Err(MetricsError::NoAnomalies);
        }
        let h = self.hits_at(k);
        Ok((h / k as f64, h / self.anomalies as f64))
    }

    /// `Σ_i (R(i) - R(i-1)) P(i)` with `R(0) = 0`, in expectation over tie orders.
    pub fn average_precision(&self) -> Result<f64, MetricsError> {
        if self.anomalies == 0 {
            return Err(MetricsError::NoAnomalies);
        }
        let mut before = 0usize;
        let mut hits_before = 0usize;
        let mut sum = 0.0;
        for &(g, a) in &self.groups {
            if a > 0 {
                let (gf, af) = (g as f64, a as f64);
                for t in 1..=g {
                    // Given an anomaly at the t-th slot, the t-1 slots above it hold
                    // (a-1)/(g-1) anomalies each on average.
                    let above = if g > 1 { (t - 1) as f64 * (af - 1.0) / (gf - 1.0) } else { 0.0 };
                    sum += af / gf * (hits_before as f64 + 1.0 + above) / (before + t) as f64;
                }
            }
            before += g;
            hits_before += a;
        }
        Ok(sum / self.anomalies as f64)
    }
}

pub fn precision_recall_at(scores: &[f64], truth: &[bool], k: usize) -> Result<(f64, f64), MetricsError> {
    Ranking::new(scores, truth)?.precision_recall_at(k)
}

pub fn average_precision(scores: &[f64], truth: &[bool]) -> Result<f64, MetricsError> {
    Ranking::new(scores, truth)?.average_precision()
}

/// Precision and recall on [`K_GRID`] cutoffs up to `n`, plus average precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<(usize, f64, f64)>,
    pub average_precision: f64,
}

pub fn report(scores: &[f64], truth: &[bool]) -> Result<Report, MetricsError> {
    let r = Ranking::new(scores, truth)?;
    let n = r.len();
    let rows = K_GRID
        .iter()
        .filter(|&&k| k <= n)
        .map(|&k| r.precision_recall_at(k).map(|(p, q)| (k, p, q)))
        .collect::<Result<_, _>>()?;
    Ok(Report { rows, average_precision: r.average_precision()? })
}
