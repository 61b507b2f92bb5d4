//! Spectra of community subgraphs: adjacency, combinatorial Laplacian and
//! random-walk operator, plus eigenvector-localisation features.

pub mod eigen;
pub mod lanczos;
pub mod localisation;

use crate::graph::SymmetricWeights;
use eigen::{extreme_eigenpairs, Eigenpair, SymDense};

/// The four eigenvector slices, in feature order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    /// Largest eigenvalues of `W + Wᵀ`.
    AdjUpper,
    /// Smallest eigenvalues of `W + Wᵀ`.
    AdjLower,
    /// Smallest non-trivial eigenvalues of `D - W`.
    Comb,
    /// Largest non-trivial eigenvalues of `D⁻¹W`.
    RandomWalk,
}

impl Operator {
    pub const ALL: [Operator; 4] = [Operator::AdjUpper, Operator::AdjLower, Operator::Comb, Operator::RandomWalk];

    pub fn slug(self) -> &'static str {
        match self {
            Operator::AdjUpper => "adj_upper",
            Operator::AdjLower => "adj_lower",
            Operator::Comb => "comb_lap",
            Operator::RandomWalk => "rw_lap",
        }
    }

    /// Number of eigenvectors excluded as trivial.
    pub fn trivial(self) -> usize {
        match self {
            Operator::AdjUpper | Operator::AdjLower => 0,
            Operator::Comb | Operator::RandomWalk => 1,
        }
    }

    /// Underlying matrix; both adjacency slices share one.
    pub fn matrix(self) -> Matrix {
        match self {
            Operator::AdjUpper | Operator::AdjLower => Matrix::Adjacency,
            Operator::Comb => Matrix::Combinatorial,
            Operator::RandomWalk => Matrix::RandomWalk,
        }
    }

    /// Non-trivial eigenvectors a graph on `n` nodes offers for this slice, capped at `k`.
    pub fn available(self, n: usize, k: usize) -> usize {
        n.saturating_sub(self.trivial()).min(k)
    }
}

/// Distinct matrices behind the four slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Matrix {
    Adjacency,
    Combinatorial,
    RandomWalk,
}

impl Matrix {
    pub const ALL: [Matrix; 3] = [Matrix::Adjacency, Matrix::Combinatorial, Matrix::RandomWalk];

    pub fn operators(self) -> &'static [Operator] {
        match self {
            Matrix::Adjacency => &[Operator::AdjUpper, Operator::AdjLower],
            Matrix::Combinatorial => &[Operator::Comb],
            Matrix::RandomWalk => &[Operator::RandomWalk],
        }
    }

    pub fn trivial(self) -> usize {
        self.operators()[0].trivial()
    }
}

/// Communities above this size use the iterative solver first.
pub const DENSE_LIMIT: usize = 1500;

fn dense_from(w: &SymmetricWeights, f: impl Fn(usize, usize, f64) -> f64, diag: impl Fn(usize) -> f64) -> SymDense {
    let n = w.size();
    let mut m = SymDense::zeros(n);
    for i in 0..n {
        m.set(i, i, diag(i));
        for &(j, x) in w.row(i) {
            if j > i {
                m.set(i, j, f(i, j, x));
            }
        }
    }
    m
}

/// Symmetric normalisation `D^{-1/2} W D^{-1/2}`; isolated nodes get factor 1.
fn inv_sqrt_degrees(w: &SymmetricWeights) -> Vec<f64> {
    w.degrees().into_iter().map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 1.0 }).collect()
}

fn extremes(w: &SymmetricWeights, matrix: Matrix, low: usize, high: usize, tie_seed: u64) -> eigen::Extremes {
    let n = w.size();
    let deg = w.degrees();
    let isq = inv_sqrt_degrees(w);
    if n > DENSE_LIMIT {
        let op = lanczos::SparseOperator::new(w, matrix);
        if let Some(ext) = lanczos::extreme_eigenpairs(&op, low, high, tie_seed, lanczos::DEADLINE) {
            return ext;
        }
    }
    let m = match matrix {
        Matrix::Adjacency => dense_from(w, |_, _, x| x, |i| w.get(i, i)),
        Matrix::Combinatorial => dense_from(w, |_, _, x| -x, |i| deg[i] - w.get(i, i)),
        Matrix::RandomWalk => dense_from(w, |i, j, x| x * isq[i] * isq[j], |i| w.get(i, i) * isq[i] * isq[i]),
    };
    extreme_eigenpairs(&m, low, high, tie_seed)
}

fn rw_vectors(w: &SymmetricWeights, pairs: Vec<Eigenpair>) -> Vec<Eigenpair> {
    let isq = inv_sqrt_degrees(w);
    pairs
        .into_iter()
        .map(|mut p| {
            for (x, s) in p.vector.iter_mut().zip(&isq) {
                *x *= s;
            }
            let norm = p.vector.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                p.vector.iter_mut().for_each(|x| *x /= norm);
            }
            p
        })
        .collect()
}

/// Up to `k` eigenpairs for each slice served by `matrix`, in slice order:
/// adjacency yields `[upper, lower]`, each Laplacian a single slice with the
/// trivial eigenvector removed.
pub fn matrix_slices(w: &SymmetricWeights, matrix: Matrix, k: usize, tie_seed: u64) -> Vec<Vec<Eigenpair>> {
    let n = w.size();
    match matrix {
        Matrix::Adjacency => {
            let ext = extremes(w, matrix, k, k, tie_seed);
            vec![ext.high, ext.low]
        }
        Matrix::Combinatorial => {
            let ext = extremes(w, matrix, (k + 1).min(n), 0, tie_seed);
            vec![ext.low.into_iter().skip(1).collect()]
        }
        Matrix::RandomWalk => {
            let ext = extremes(w, matrix, 0, (k + 1).min(n), tie_seed);
            vec![rw_vectors(w, ext.high.into_iter().skip(1).collect())]
        }
    }
}

/// Up to `k` eigenpairs for each of the four slices, in [`Operator::ALL`] order.
pub fn operator_slices(w: &SymmetricWeights, k: usize, tie_seed: u64) -> [Vec<Eigenpair>; 4] {
    let mut adj = matrix_slices(w, Matrix::Adjacency, k, tie_seed).into_iter();
    let comb = matrix_slices(w, Matrix::Combinatorial, k, tie_seed).pop().unwrap_or_default();
    let rw = matrix_slices(w, Matrix::RandomWalk, k, tie_seed).pop().unwrap_or_default();
    [adj.next().unwrap_or_default(), adj.next().unwrap_or_default(), comb, rw]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, WeightedDigraph};

    fn sym(n: usize, edges: &[(usize, usize, f64)]) -> SymmetricWeights {
        WeightedDigraph::new(n, edges.iter().map(|&(a, b, w)| Edge::new(a, b, w)).collect()).unwrap().symmetrise()
    }

    #[test]
    fn laplacian_drops_one_zero_eigenvector() {
        // Two disjoint edges: Laplacian eigenvalue 0 twice, one stays.
        let w = sym(4, &[(0, 1, 1.0), (2, 3, 1.0)]);
        let comb = &matrix_slices(&w, Matrix::Combinatorial, 20, 1)[0];
        assert_eq!(comb.len(), 3);
        assert!(comb[0].value.abs() < 1e-10);
        assert!((comb[1].value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn random_walk_vectors_solve_the_unsymmetric_problem() {
        let w = sym(5, &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.5), (3, 4, 0.5), (4, 0, 1.0), (0, 2, 3.0)]);
        let deg = w.degrees();
        let rw = &matrix_slices(&w, Matrix::RandomWalk, 20, 1)[0];
        assert_eq!(rw.len(), 4);
        for p in rw {
            for i in 0..5 {
                let lhs: f64 = w.row(i).iter().map(|&(j, x)| x * p.vector[j]).sum::<f64>() / deg[i];
                assert!((lhs - p.value * p.vector[i]).abs() < 1e-9);
            }
            assert!(p.value < 1.0 - 1e-9);
        }
    }

    #[test]
    fn adjacency_slices_are_ordered() {
        let w = sym(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]);
        let s = operator_slices(&w, 20, 0);
        assert_eq!(s[0].len(), 4);
        assert!(s[0][0].value >= s[0][1].value);
        assert!(s[1][0].value <= s[1][1].value);
        assert!((s[0][0].value + s[1][0].value).abs() < 1e-10);
    }
}
