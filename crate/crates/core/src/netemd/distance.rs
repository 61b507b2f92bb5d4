//! Shape distance between two samples: the smallest L1 gap between their
//! standardised distribution functions over all translations.

use crate::stats::population_sd;

/// Samples whose range is below this are treated as a point mass.
pub const POINT_MASS_RANGE: f64 = 1e-10;

/// Sorted sample divided by its population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardisedEdf {
    values: Vec<f64>,
    point_mass: bool,
}

impl StandardisedEdf {
    /// `None` for an empty sample.
    pub fn new(raw: &[f64]) -> Option<Self> {
        if raw.is_empty() {
            return None;
        }
        let (lo, hi) = raw.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        if hi - lo < POINT_MASS_RANGE {
            return Some(Self { values: vec![0.0; raw.len()], point_mass: true });
        }
        let sd = population_sd(raw);
        let mut values: Vec<f64> = raw.iter().map(|x| x / sd).collect();
        values.sort_by(f64::total_cmp);
        Some(Self { values, point_mass: false })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_point_mass(&self) -> bool {
        self.point_mass
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Exact distance. For 1-D distributions the shifted area equals
/// `∫₀¹ |Qa(u) - Qb(u) - s| du`, minimised at a weighted median of the
/// quantile differences.
pub fn edf_distance(a: &StandardisedEdf, b: &StandardisedEdf) -> f64 {
    let diffs = quantile_differences(a.values(), b.values());
    let mut sorted = diffs.clone();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut acc = 0.0;
    let mut s = sorted[0].0;
    for &(d, len) in &sorted {
        acc += len;
        if acc >= 0.5 {
            s = d;
            break;
        }
    }
    diffs.iter().map(|&(d, len)| len * (d - s).abs()).sum()
}

/// Piecewise-constant `Qa(u) - Qb(u)` as `(difference, interval length)`.
fn quantile_differences(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    let (n, m) = (a.len() as u128, b.len() as u128);
    let total = (n * m) as f64;
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0u128, 0u128);
    let mut pos = 0u128;
    // Breakpoints in units of 1 / (n m): a steps every m, b every n.
    while i < n && j < m {
        let next_a = (i + 1) * m;
        let next_b = (j + 1) * n;
        let end = next_a.min(next_b);
        out.push((a[i as usize] - b[j as usize], (end - pos) as f64 / total));
        pos = end;
        if next_a == end {
            i += 1;
        }
        if next_b == end {
            j += 1;
        }
    }
    out
}

/// Distance between the standardised samples `x` and `y`.
///
/// Panics if either sample is empty.
pub fn netemd_distance(x: &[f64], y: &[f64]) -> f64 {
    let a = StandardisedEdf::new(x).expect("non-empty sample");
    let b = StandardisedEdf::new(y).expect("non-empty sample");
    edf_distance(&a, &b)
}

/// `∫ |Fa(t + s) - Fb(t)| dt` for the step distribution functions.
pub fn shifted_area(a: &StandardisedEdf, b: &StandardisedEdf, s: f64) -> f64 {
    let xa: Vec<f64> = a.values().iter().map(|x| x - s).collect();
    let xb = b.values();
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut area = 0.0;
    let mut last = xa[0].min(xb[0]);
    while i < xa.len() || j < xb.len() {
        let next = match (xa.get(i), xb.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        area += (i as f64 / na - j as f64 / nb).abs() * (next - last);
        while i < xa.len() && xa[i] <= next {
            i += 1;
        }
        while j < xb.len() && xb[j] <= next {
            j += 1;
        }
        last = next;
    }
    area
}

/// Distance by ternary search over the shift; the objective is convex.
pub fn distance_by_search(a: &StandardisedEdf, b: &StandardisedEdf) -> f64 {
    let va = a.values();
    let vb = b.values();
    let mut lo = va[0] - vb[vb.len() - 1];
    let mut hi = va[va.len() - 1] - vb[0];
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if shifted_area(a, b, m1) <= shifted_area(a, b, m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    shifted_area(a, b, 0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn edf(x: &[f64]) -> StandardisedEdf {
        StandardisedEdf::new(x).unwrap()
    }

    #[test]
    fn identical_samples() {
        assert_eq!(netemd_distance(&[1.0, 2.0, 7.0], &[7.0, 1.0, 2.0]), 0.0);
    }

    #[test]
    fn affine_copy_has_zero_distance() {
        let x: Vec<f64> = (0..200).map(|i| crate::stats::normal_quantile((i as f64 + 0.5) / 200.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 11.0).collect();
        assert!(netemd_distance(&x, &y) < 1e-12);
    }

    #[test]
    fn small_binary_samples_match_grid_oracle() {
        // Oracle: minimum of the shifted area over a 1e-4 grid of shifts.
        let (a, b) = (edf(&[0.0, 0.0, 1.0]), edf(&[0.0, 1.0, 1.0]));
        let grid = (-40_000..=40_000).map(|k| shifted_area(&a, &b, k as f64 * 1e-4)).fold(f64::INFINITY, f64::min);
        let exact = edf_distance(&a, &b);
        assert!(exact > 0.0);
        assert!((exact - grid).abs() < 1e-3);
        // Both standardised by sd = √2/3: the quantiles differ by 1/sd on the middle third.
        assert!((exact - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn point_mass_against_spread() {
        let a = edf(&[5.0, 5.0 + 1e-12]);
        assert!(a.is_point_mass());
        let b = edf(&[0.0, 1.0]);
        // b standardises to {0, 2}; the best shift leaves half the mass 1 away.
        assert!((edf_distance(&a, &b) - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn exact_matches_search(x in prop::collection::vec(-5.0f64..5.0, 1..12), y in prop::collection::vec(-5.0f64..5.0, 1..12)) {
            let (a, b) = (edf(&x), edf(&y));
            let exact = edf_distance(&a, &b);
            let search = distance_by_search(&a, &b);
            prop_assert!(exact <= search + 1e-9);
            prop_assert!((exact - search).abs() < 1e-6);
        }

        #[test]
        fn symmetric_and_affine_invariant(
            x in prop::collection::vec(-5.0f64..5.0, 2..15),
            y in prop::collection::vec(-5.0f64..5.0, 2..15),
            scale in 0.1f64..10.0,
            shift in -10.0f64..10.0,
        ) {
            let d = netemd_distance(&x, &y);
            prop_assert!(d >= 0.0);
            prop_assert!((d - netemd_distance(&y, &x)).abs() < 1e-9);
            let x2: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
            prop_assert!((d - netemd_distance(&x2, &y)).abs() < 1e-6);
            prop_assert!(netemd_distance(&x, &x) < 1e-12);
        }
    }
}
