//! Detectability bounds for planted structures and the training grid they induce.
//!
//! A bound is the weight-tail probability below which a structure of the given
//! shape is not expected to arise by chance in a graph on `n` nodes. All
//! quantities are evaluated in log space.

/// Structure shapes with their parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Clique(usize),
    /// `k` nodes, `k1` of them pointing into the centre.
    Star { k: usize, k1: usize },
    Path(usize),
    Ring(usize),
    /// The 9-node, 18-edge layered tree.
    Tree,
}

/// `ln C(n, k)` as an exact sum of logs.
pub fn ln_choose(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// `ln k!`.
pub fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Detectability bound for `shape` in a graph on `n` nodes.
pub fn detectability_bound(n: usize, shape: Shape) -> f64 {
    match shape {
        Shape::Clique(k) => {
            let pairs = (k * (k - 1) / 2) as f64;
            let x = (-ln_choose(n, k) / pairs).exp();
            1.0 - (1.0 - x).sqrt()
        }
        Shape::Star { k, k1 } => {
            let ln = ln_choose(n, k) + ln_choose(k, k1) + ((k - k1) as f64).ln();
            (-ln / (k - 1) as f64).exp()
        }
        Shape::Path(k) => (-(ln_choose(n, k) + ln_factorial(k)) / (k - 1) as f64).exp(),
        Shape::Ring(k) => (-(ln_choose(n, k) + ln_factorial(k - 1)) / k as f64).exp(),
        Shape::Tree => (-(4f64.ln() + ln_choose(n, 9) + ln_choose(9, 5)) / 18.0).exp(),
    }
}

/// One training regime: ER edge probability and planted weight floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub p: f64,
    pub w: f64,
}

/// Grid of `p ∈ {0.001..0.005}` and `1 - w ∈ {0, 0.001, .., 0.01}` keeping
/// the points with `(1 - w) p` below the 5-node path bound at `n`.
/// Grid values are formed from integer thousandths.
pub fn training_grid(n: usize) -> Vec<Regime> {
    let bound_scaled = detectability_bound(n, Shape::Path(5)) * 1e6;
    let mut out = Vec::new();
    for i in 1..=5u32 {
        for j in 0..=10u32 {
            if ((i * j) as f64) < bound_scaled {
                out.push(Regime { p: i as f64 / 1000.0, w: (1000 - j) as f64 / 1000.0 });
            }
        }
    }
    out
}
