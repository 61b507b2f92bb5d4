//! Lanczos iteration with full reorthogonalisation for extreme eigenpairs of
//! large sparse operators.
//!
//! Converged pairs are locked and the iteration is rerun on their orthogonal
//! complement until no new eigenvalue enters the requested window, so
//! repeated eigenvalues are recovered. Returns `None` when the step budget or
//! the deadline runs out; callers then use the dense path.

use std::time::{Duration, Instant};

use rand::Rng as _;

use super::eigen::{full_eigenpairs, Eigenpair, Extremes, SymDense, RESIDUAL_TOL};
use super::Matrix;
use crate::graph::SymmetricWeights;
use crate::seed;

/// Wall-clock budget before falling back to the dense solver.
pub const DEADLINE: Duration = Duration::from_secs(30);

/// Matrix-free symmetric operator built from sparse symmetric weights.
#[derive(Debug, Clone)]
pub struct SparseOperator<'a> {
    w: &'a SymmetricWeights,
    matrix: Matrix,
    deg: Vec<f64>,
    isq: Vec<f64>,
}

impl<'a> SparseOperator<'a> {
    pub fn new(w: &'a SymmetricWeights, matrix: Matrix) -> Self {
        let deg = w.degrees();
        let isq = deg.iter().map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 1.0 }).collect();
        Self { w, matrix, deg, isq }
    }

    pub fn size(&self) -> usize {
        self.w.size()
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let row = self.w.row(i);
            *yi = match self.matrix {
                Matrix::Adjacency => row.iter().map(|&(j, a)| a * x[j]).sum(),
                Matrix::Combinatorial => self.deg[i] * x[i] - row.iter().map(|&(j, a)| a * x[j]).sum::<f64>(),
                Matrix::RandomWalk => self.isq[i] * row.iter().map(|&(j, a)| a * self.isq[j] * x[j]).sum::<f64>(),
            };
        }
    }

    fn norm_bound(&self) -> f64 {
        match self.matrix {
            Matrix::Adjacency => self.deg.iter().fold(0.0, |m: f64, d| m.max(*d)),
            Matrix::Combinatorial => 2.0 * self.deg.iter().fold(0.0, |m: f64, d| m.max(*d)),
            Matrix::RandomWalk => 1.0,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            axpy(v, -c, q);
        }
    }
}

fn unit_random(n: usize, rng: &mut seed::Rng, against: &[Vec<f64>]) -> Option<Vec<f64>> {
    for _ in 0..5 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        orthogonalize(&mut v, against);
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            return Some(v);
        }
    }
    None
}

/// One Lanczos run on the complement of `locked`. Returns converged Ritz
/// pairs at both ends (up to `low` and `high` of them).
fn run(
    op: &SparseOperator<'_>,
    locked: &[Vec<f64>],
    low: usize,
    high: usize,
    rng: &mut seed::Rng,
    deadline: Instant,
) -> Option<(Vec<Eigenpair>, Vec<Eigenpair>)> {
    let n = op.size();
    let dim = n.checked_sub(locked.len())?;
    if dim == 0 {
        return Some((Vec::new(), Vec::new()));
    }
    let tol = RESIDUAL_TOL * op.norm_bound().max(1.0) * 0.1;
    let max_steps = dim.min((4 * (low + high)).max(120) + 400);
    let mut q: Vec<Vec<f64>> = vec![unit_random(n, rng, locked)?];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    loop {
        if Instant::now() > deadline {
            return None;
        }
        let j = q.len() - 1;
        op.apply(&q[j], &mut w);
        let a = dot(&q[j], &w);
        alpha.push(a);
        orthogonalize(&mut w, locked);
        orthogonalize(&mut w, &q);
        let b = dot(&w, &w).sqrt();
        let m = q.len();
        let check = m == dim || m >= max_steps || (m >= low + high + 10 && m % 10 == 0);
        if check {
            let mut t = SymDense::zeros(m);
            for i in 0..m {
                t.set(i, i, alpha[i]);
                if i + 1 < m {
                    t.set(i, i + 1, beta[i]);
                }
            }
            let ritz = full_eigenpairs(&t);
            let converged = |p: &Eigenpair| (b * p.vector[m - 1]).abs() <= tol || m == dim;
            let lo: Vec<&Eigenpair> = ritz.iter().take(low.min(m)).collect();
            let hi: Vec<&Eigenpair> = ritz.iter().rev().take(high.min(m)).collect();
            if lo.iter().chain(&hi).all(|p| converged(p)) {
                let lift = |p: &Eigenpair| {
                    let mut v = vec![0.0; n];
                    for (qi, s) in q.iter().zip(&p.vector) {
                        axpy(&mut v, *s, qi);
                    }
                    let norm = dot(&v, &v).sqrt();
                    v.iter_mut().for_each(|x| *x /= norm);
                    Eigenpair { value: p.value, vector: v }
                };
                return Some((lo.into_iter().map(lift).collect(), hi.into_iter().map(lift).collect()));
            }
            if m >= max_steps {
                return None;
            }
        }
        beta.push(b);
        let next = if b > 1e-10 * op.norm_bound().max(1.0) {
            w.iter().map(|x| x / b).collect()
        } else {
            // Invariant subspace found; continue in a fresh direction.
            *beta.last_mut().expect("pushed") = 0.0;
            let mut against = locked.to_vec();
            against.extend(q.iter().cloned());
            unit_random(n, rng, &against)?
        };
        q.push(next);
    }
}

fn residual_ok(op: &SparseOperator<'_>, p: &Eigenpair) -> bool {
    let mut y = vec![0.0; op.size()];
    op.apply(&p.vector, &mut y);
    let r: f64 = y.iter().zip(&p.vector).map(|(a, v)| (a - p.value * v).powi(2)).sum::<f64>().sqrt();
    r <= RESIDUAL_TOL * op.norm_bound().max(1.0)
}

/// The `low` smallest and `high` largest eigenpairs of `op`, or `None` if
/// the iteration does not converge before `budget` elapses.
pub fn extreme_eigenpairs(
    op: &SparseOperator<'_>,
    low: usize,
    high: usize,
    tie_seed: u64,
    budget: Duration,
) -> Option<Extremes> {
    let n = op.size();
    let (low, high) = (low.min(n), high.min(n));
    let deadline = Instant::now() + budget;
    let mut rng = seed::rng(seed::derive(tie_seed, &[0x1a9c]));
    let tol = 1e-8 * op.norm_bound().max(1.0);
    let mut found: Vec<Eigenpair> = Vec::new();
    for _round in 0..16 {
        let locked: Vec<Vec<f64>> = found.iter().map(|p| p.vector.clone()).collect();
        let (lo, hi) = run(op, &locked, low, high, &mut rng, deadline)?;
        let mut sorted: Vec<f64> = found.iter().map(|p| p.value).collect();
        sorted.sort_by(f64::total_cmp);
        let low_edge = sorted.get(low.wrapping_sub(1)).copied().filter(|_| low > 0);
        let high_edge = sorted.len().checked_sub(high).and_then(|i| sorted.get(i).copied()).filter(|_| high > 0);
        let enters = |p: &Eigenpair| {
            let in_low = low > 0 && (sorted.len() < low || low_edge.is_some_and(|e| p.value < e - tol));
            let in_high = high > 0 && (sorted.len() < high || high_edge.is_some_and(|e| p.value > e + tol));
            in_low || in_high
        };
        let fresh: Vec<Eigenpair> = lo.into_iter().chain(hi).filter(|p| enters(p)).collect();
        if fresh.is_empty() {
            break;
        }
        for p in fresh {
            if !found.iter().any(|f| dot(&f.vector, &p.vector).abs() > 0.5) {
                found.push(p);
            }
        }
        if found.len() >= n {
            break;
        }
    }
    found.sort_by(|a, b| a.value.total_cmp(&b.value));
    if found.len() < low.max(high) || !found.iter().all(|p| residual_ok(op, p)) {
        return None;
    }
    let low_pairs = found.iter().take(low).cloned().collect();
    let high_pairs = found.iter().rev().take(high).cloned().collect();
    Some(Extremes { low: low_pairs, high: high_pairs })
}
