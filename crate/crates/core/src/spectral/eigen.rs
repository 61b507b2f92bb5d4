//! Selected eigenpairs of dense symmetric matrices.
//!
//! Householder tridiagonalisation, implicit QL for the eigenvalues and
//! inverse iteration for the requested eigenvectors only. Every returned pair
//! is checked against the original matrix; any failure reruns the full
//! decomposition through `nalgebra`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng as _;

use crate::seed;

/// Dense symmetric matrix in row-major full storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymDense {
    n: usize,
    data: Vec<f64>,
}

impl SymDense {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
        if i != j {
            self.data[j * self.n + i] += v;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.data[i * self.n..(i + 1) * self.n].iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].iter().map(|a| a.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }
}

/// An eigenvalue with its unit eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// Lowest and highest eigenpairs; the two lists may overlap on small matrices.
#[derive(Debug, Clone, Default)]
pub struct Extremes {
    /// Ascending eigenvalue order.
    pub low: Vec<Eigenpair>,
    /// Descending eigenvalue order.
    pub high: Vec<Eigenpair>,
}

/// Relative residual bound `‖Av - λv‖ ≤ RESIDUAL_TOL · max(1, ‖A‖∞)`.
pub const RESIDUAL_TOL: f64 = 1e-6;

struct Tridiagonal {
    d: Vec<f64>,
    e: Vec<f64>,
    reflectors: Vec<(Vec<f64>, f64)>,
}

fn tridiagonalize(a: &SymDense) -> Tridiagonal {
    let n = a.n;
    let mut m = a.data.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n.saturating_sub(1)];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let mut v: Vec<f64> = (0..len).map(|i| m[(k + 1 + i) * n + k]).collect();
        d[k] = m[k * n + k];
        let tail: f64 = v[1..].iter().map(|x| x * x).sum();
        if tail == 0.0 {
            e[k] = v[0];
            reflectors.push((Vec::new(), 0.0));
            continue;
        }
        let norm = (v[0] * v[0] + tail).sqrt();
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let beta = 2.0 / (v[0] * v[0] + tail);
        e[k] = alpha;
        let off = k + 1;
        // p = beta * B v over the trailing block, lower triangle only.
        let mut p = vec![0.0; len];
        for i in 0..len {
            let start = (off + i) * n + off;
            let row = &m[start..start + i];
            let vi = v[i];
            let mut acc = [0.0; 4];
            let mut pc = p[..i].chunks_exact_mut(4);
            let mut rc = row.chunks_exact(4);
            let mut vc = v[..i].chunks_exact(4);
            for ((pj, aij), vj) in (&mut pc).zip(&mut rc).zip(&mut vc) {
                for l in 0..4 {
                    acc[l] += aij[l] * vj[l];
                    pj[l] += aij[l] * vi;
                }
            }
            let mut tail = m[start + i] * vi;
            for ((pj, &aij), &vj) in pc.into_remainder().iter_mut().zip(rc.remainder()).zip(vc.remainder()) {
                tail += aij * vj;
                *pj += aij * vi;
            }
            p[i] += acc[0] + acc[1] + acc[2] + acc[3] + tail;
        }
        for x in &mut p {
            *x *= beta;
        }
        let kappa = 0.5 * beta * p.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        let w: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi - kappa * vi).collect();
        for i in 0..len {
            let start = (off + i) * n + off;
            let (vi, wi) = (v[i], w[i]);
            for ((a, &wj), &vj) in m[start..=start + i].iter_mut().zip(&w[..=i]).zip(&v[..=i]) {
                *a -= vi * wj + wi * vj;
            }
        }
        reflectors.push((v, beta));
    }
    if n >= 2 {
        d[n - 2] = m[(n - 2) * n + n - 2];
        d[n - 1] = m[(n - 1) * n + n - 1];
        e[n - 2] = m[(n - 1) * n + n - 2];
    } else if n == 1 {
        d[0] = m[0];
    }
    Tridiagonal { d, e, reflectors }
}

/// Eigenvalues of the symmetric tridiagonal matrix `(d, e)` in ascending
/// order, or `None` if QL fails to converge.
fn tridiagonal_eigenvalues(d: &[f64], e: &[f64]) -> Option<Vec<f64>> {
    let n = d.len();
    let mut d = d.to_vec();
    let mut e: Vec<f64> = e.iter().copied().chain(std::iter::once(0.0)).take(n).collect();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return None;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m as isize - 1;
            let mut underflow = false;
            while i >= l as isize {
                let iu = i as usize;
                let f = s * e[iu];
                let b = c * e[iu];
                r = (f * f + g * g).sqrt();
                e[iu + 1] = r;
                if r == 0.0 {
                    d[iu + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[iu + 1] - p;
                r = (d[iu] - g) * s + 2.0 * c * b;
                p = s * r;
                d[iu + 1] = g + p;
                g = c * r - b;
                i -= 1;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Some(d)
}

/// Solves `(T - mu I) x = b` in place by LU with partial pivoting.
fn tridiagonal_solve(d: &[f64], e: &[f64], mu: f64, b: &mut [f64], tiny: f64) {
    let n = d.len();
    if n == 1 {
        let piv = if (d[0] - mu).abs() < tiny { tiny } else { d[0] - mu };
        b[0] /= piv;
        return;
    }
    let mut diag: Vec<f64> = d.iter().map(|x| x - mu).collect();
    let mut dl = e.to_vec();
    let mut du = e.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut swap = vec![false; n - 1];
    for i in 0..n - 1 {
        if diag[i].abs() >= dl[i].abs() {
            if diag[i] == 0.0 {
                diag[i] = tiny;
            }
            let fact = dl[i] / diag[i];
            dl[i] = fact;
            diag[i + 1] -= fact * du[i];
        } else {
            let fact = diag[i] / dl[i];
            diag[i] = dl[i];
            dl[i] = fact;
            let temp = du[i];
            du[i] = diag[i + 1];
            diag[i + 1] = temp - fact * diag[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du[i + 1];
            }
            swap[i] = true;
        }
    }
    if diag[n - 1] == 0.0 {
        diag[n - 1] = tiny;
    }
    for i in 0..n - 1 {
        if swap[i] {
            b.swap(i, i + 1);
        }
        b[i + 1] -= dl[i] * b[i];
    }
    for i in (0..n).rev() {
        let mut acc = b[i];
        if i + 1 < n {
            acc -= du[i] * b[i + 1];
        }
        if i + 2 < n {
            acc -= du2[i] * b[i + 2];
        }
        let piv = if diag[i].abs() < tiny { tiny.copysign(diag[i]) } else { diag[i] };
        b[i] = acc / piv;
    }
}

fn normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return false;
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    true
}

/// Applies the Householder reflectors to the `k` columns of the row-major
/// `n x k` block `z`.
fn back_transform(t: &Tridiagonal, z: &mut [f64], k: usize) {
    let mut dots = vec![0.0; k];
    for (r, (v, beta)) in t.reflectors.iter().enumerate().rev() {
        if *beta == 0.0 {
            continue;
        }
        dots.iter_mut().for_each(|d| *d = 0.0);
        for (i, vi) in v.iter().enumerate() {
            let row = &z[(r + 1 + i) * k..(r + 2 + i) * k];
            for (d, x) in dots.iter_mut().zip(row) {
                *d += vi * x;
            }
        }
        dots.iter_mut().for_each(|d| *d *= beta);
        for (i, vi) in v.iter().enumerate() {
            let row = &mut z[(r + 1 + i) * k..(r + 2 + i) * k];
            for (x, d) in row.iter_mut().zip(&dots) {
                *x -= vi * d;
            }
        }
    }
}

/// Largest residual `‖Av - λv‖` over `pairs`.
fn max_residual(a: &SymDense, pairs: &[Eigenpair]) -> f64 {
    let (n, k) = (a.n, pairs.len());
    let mut block = vec![0.0; n * k];
    for (c, p) in pairs.iter().enumerate() {
        for (i, x) in p.vector.iter().enumerate() {
            block[i * k + c] = *x;
        }
    }
    let mut sums = vec![0.0; k];
    let mut av = vec![0.0; k];
    for i in 0..n {
        av.iter_mut().for_each(|x| *x = 0.0);
        for (j, &aij) in a.data[i * n..(i + 1) * n].iter().enumerate() {
            if aij != 0.0 {
                for (x, b) in av.iter_mut().zip(&block[j * k..(j + 1) * k]) {
                    *x += aij * b;
                }
            }
        }
        for (c, p) in pairs.iter().enumerate() {
            let r = av[c] - p.value * block[i * k + c];
            sums[c] += r * r;
        }
    }
    sums.into_iter().fold(0.0, f64::max).sqrt()
}

/// Eigenpairs for the ascending eigenvalue indices in `wanted` (sorted, unique).
/// Degenerate eigenspaces receive an orthonormal basis.
fn eigenpairs_at(a: &SymDense, wanted: &[usize]) -> Option<(Vec<f64>, Vec<Eigenpair>)> {
    let n = a.n;
    let t = tridiagonalize(a);
    let values = tridiagonal_eigenvalues(&t.d, &t.e)?;
    let tnorm = t
        .d
        .iter()
        .enumerate()
        .map(|(i, di)| di.abs() + if i > 0 { t.e[i - 1].abs() } else { 0.0 } + t.e.get(i).map_or(0.0, |x| x.abs()))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let ortol = 1e-3 * tnorm;
    let pertol = 10.0 * f64::EPSILON * tnorm;
    let tiny = f64::EPSILON * tnorm;
    let mut rng = seed::rng(0x5eed_e16e);
    let mut tri_vectors: Vec<Vec<f64>> = Vec::with_capacity(wanted.len());
    let mut cluster_start = 0usize;
    let mut last_mu = f64::NEG_INFINITY;
    for (slot, &idx) in wanted.iter().enumerate() {
        let lambda = values[idx];
        let contiguous = slot > 0 && wanted[slot - 1] + 1 == idx;
        if !(contiguous && lambda - values[wanted[slot - 1]] < ortol) {
            cluster_start = slot;
        }
        let mut mu = lambda;
        if slot > cluster_start && mu - last_mu < pertol {
            mu = last_mu + pertol;
        }
        last_mu = mu;
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        normalize(&mut x);
        for _ in 0..4 {
            tridiagonal_solve(&t.d, &t.e, mu, &mut x, tiny);
            for prev in &tri_vectors[cluster_start..slot] {
                let dot: f64 = prev.iter().zip(&x).map(|(a, b)| a * b).sum();
                for (xi, pi) in x.iter_mut().zip(prev) {
                    *xi -= dot * pi;
                }
            }
            if !normalize(&mut x) {
                return None;
            }
        }
        tri_vectors.push(x);
    }
    let k = wanted.len();
    let mut z = vec![0.0; n * k];
    for (c, x) in tri_vectors.iter().enumerate() {
        for (i, xi) in x.iter().enumerate() {
            z[i * k + c] = *xi;
        }
    }
    back_transform(&t, &mut z, k);
    let pairs = wanted
        .iter()
        .enumerate()
        .map(|(c, &idx)| {
            let mut v: Vec<f64> = (0..n).map(|i| z[i * k + c]).collect();
            normalize(&mut v);
            Eigenpair { value: values[idx], vector: v }
        })
        .collect();
    Some((values, pairs))
}

/// All eigenpairs through `nalgebra`, ascending.
pub fn full_eigenpairs(a: &SymDense) -> Vec<Eigenpair> {
    let eig = SymmetricEigen::new(a.to_nalgebra());
    let mut pairs: Vec<Eigenpair> = (0..a.n)
        .map(|i| Eigenpair { value: eig.eigenvalues[i], vector: eig.eigenvectors.column(i).iter().copied().collect() })
        .collect();
    pairs.sort_by(|x, y| x.value.total_cmp(&y.value));
    pairs
}

/// Shuffles each run of equal eigenvalues in `pairs` (already in eigenvalue order).
fn shuffle_ties(pairs: &mut [Eigenpair], scale: f64, rng: &mut seed::Rng) {
    use rand::seq::SliceRandom;
    let tol = 1e-10 * scale.max(1.0);
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i + 1;
        while j < pairs.len() && (pairs[j].value - pairs[j - 1].value).abs() <= tol {
            j += 1;
        }
        if j - i > 1 {
            pairs[i..j].shuffle(rng);
        }
        i = j;
    }
}

/// The `low` smallest and `high` largest eigenpairs of `a`. Runs of equal
/// eigenvalues are ordered by a permutation drawn from `tie_seed`.
pub fn extreme_eigenpairs(a: &SymDense, low: usize, high: usize, tie_seed: u64) -> Extremes {
    let n = a.n;
    let (low, high) = (low.min(n), high.min(n));
    if n == 0 || (low == 0 && high == 0) {
        return Extremes::default();
    }
    let mut wanted: Vec<usize> = (0..low).chain(n - high..n).collect();
    wanted.sort_unstable();
    wanted.dedup();
    let bound = RESIDUAL_TOL * a.norm_inf().max(1.0);
    let selective = eigenpairs_at(a, &wanted).filter(|(_, pairs)| max_residual(a, pairs) <= bound);
    let (values, by_index): (Vec<f64>, Vec<Option<Eigenpair>>) = match selective {
        Some((values, pairs)) => {
            let mut slots = vec![None; n];
            for (&i, p) in wanted.iter().zip(pairs) {
                slots[i] = Some(p);
            }
            (values, slots)
        }
        None => {
            let all = full_eigenpairs(a);
            (all.iter().map(|p| p.value).collect(), all.into_iter().map(Some).collect())
        }
    };
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut rng = seed::rng(tie_seed);
    let pick = |i: usize| by_index[i].clone().expect("selected eigenpair");
    let mut low_pairs: Vec<Eigenpair> = (0..low).map(pick).collect();
    let mut high_pairs: Vec<Eigenpair> = (0..high).map(|k| pick(n - 1 - k)).collect();
    shuffle_ties(&mut low_pairs, scale, &mut rng);
    shuffle_ties(&mut high_pairs, scale, &mut rng);
    Extremes { low: low_pairs, high: high_pairs }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_sym(n: usize, seed: u64) -> SymDense {
        let mut rng = seed::rng(seed);
        let mut a = SymDense::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                if rng.gen_bool(0.3) {
                    a.set(i, j, rng.gen_range(0.0..2.0));
                }
            }
        }
        a
    }

    #[test]
    fn matches_full_decomposition() {
        for (n, s) in [(1, 1), (2, 2), (5, 3), (17, 4), (60, 5)] {
            let a = random_sym(n, s);
            let full = full_eigenpairs(&a);
            let ext = extreme_eigenpairs(&a, 4, 4, 0);
            let k = 4.min(n);
            for i in 0..k {
                assert!((ext.low[i].value - full[i].value).abs() < 1e-9);
                assert!((ext.high[i].value - full[n - 1 - i].value).abs() < 1e-9);
                assert!(max_residual(&a, &ext.low[i..=i]) < 1e-8);
                assert!(max_residual(&a, &ext.high[i..=i]) < 1e-8);
            }
        }
    }

    #[test]
    fn degenerate_eigenspace_is_orthonormal() {
        // Two disjoint triangles: eigenvalue -1 with multiplicity 4.
        let mut a = SymDense::zeros(6);
        for (i, j) in [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)] {
            a.set(i, j, 1.0);
        }
        let ext = extreme_eigenpairs(&a, 4, 2, 9);
        for p in &ext.low {
            assert!((p.value + 1.0).abs() < 1e-10);
            assert!(max_residual(&a, std::slice::from_ref(p)) < 1e-8);
        }
        for i in 0..4 {
            for j in 0..4 {
                let dot: f64 = ext.low[i].vector.iter().zip(&ext.low[j].vector).map(|(x, y)| x * y).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-8, "{i} {j} {dot}");
            }
        }
        assert!((ext.high[0].value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn tridiagonal_values_of_path_laplacian() {
        // Path on 5 nodes: eigenvalues 2 - 2cos(k pi / 5).
        let d = [1.0, 2.0, 2.0, 2.0, 1.0];
        let e = [-1.0; 4];
        let vals = tridiagonal_eigenvalues(&d, &e).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let want = 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / 5.0).cos();
            assert!((v - want).abs() < 1e-12);
        }
    }
}
