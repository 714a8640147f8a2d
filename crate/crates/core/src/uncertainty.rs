//! Convergence detection from the ensemble of simulated fronts: how unsure
//! the model still is about which side of the front a point lies on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pareto::front_dominates;

/// Fraction of simulated fronts that weakly dominate `y`.
pub fn domination_fraction(fronts: &[Vec<Vec<f64>>], y: &[f64]) -> f64 {
    assert!(!fronts.is_empty());
    let hits = fronts.iter().filter(|f| front_dominates(f, y)).count();
    hits as f64 / fronts.len() as f64
}

/// Bernoulli variance p(1-p) of the domination indicator at `y`.
pub fn domination_variance(fronts: &[Vec<Vec<f64>>], y: &[f64]) -> f64 {
    let p = domination_fraction(fronts, y);
    p * (1.0 - p)
}

/// Mean domination variance over `n_points` equally spaced points on the
/// closed Ideal-Nadir segment (both endpoints included).
pub fn line_uncertainty(
    fronts: &[Vec<Vec<f64>>],
    ideal: &[f64],
    nadir: &[f64],
    n_points: usize,
) -> f64 {
    assert!(n_points >= 2);
    let m = ideal.len();
    let mut total = 0.0;
    for k in 0..n_points {
        let t = k as f64 / (n_points - 1) as f64;
        let y: Vec<f64> = (0..m)
            .map(|j| (1.0 - t) * ideal[j] + t * nadir[j])
            .collect();
        total += domination_variance(fronts, &y);
    }
    total / n_points as f64
}

/// Mean domination variance over the box [ideal, ref_point], by uniform
/// Monte-Carlo sampling. Deterministic given `seed`.
pub fn volume_uncertainty(
    fronts: &[Vec<Vec<f64>>],
    ideal: &[f64],
    ref_point: &[f64],
    n_samples: usize,
    seed: u64,
) -> f64 {
    let m = ideal.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    let mut y = vec![0.0; m];
    for _ in 0..n_samples {
        for j in 0..m {
            // degenerate interval collapses to the single point
            y[j] = if ref_point[j] > ideal[j] {
                rng.gen_range(ideal[j]..ref_point[j])
            } else {
                ideal[j]
            };
        }
        total += domination_variance(fronts, &y);
    }
    total / n_samples as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Single-point fronts placed on the diagonal of the unit square at the
    /// given line-point indices (out of `n_points` inclusive points).
    fn diagonal_fronts(indices: &[(usize, usize)], n_points: usize) -> Vec<Vec<Vec<f64>>> {
        let mut fronts = Vec::new();
        for &(idx, count) in indices {
            let t = idx as f64 / (n_points - 1) as f64;
            for _ in 0..count {
                fronts.push(vec![vec![t, t]]);
            }
        }
        fronts
    }

    #[test]
    fn domination_fraction_counts_fronts() {
        let fronts = vec![
            vec![vec![0.2, 0.2]],
            vec![vec![0.8, 0.8]],
            vec![vec![0.4, 0.9]],
        ];
        assert_relative_eq!(domination_fraction(&fronts, &[0.5, 0.5]), 1.0 / 3.0);
        assert_relative_eq!(domination_fraction(&fronts, &[0.9, 0.95]), 1.0);
        assert_relative_eq!(domination_fraction(&fronts, &[0.1, 0.1]), 0.0);
    }

    #[test]
    fn line_uncertainty_certain_ensemble_is_zero() {
        // All fronts identical: every line point is dominated with
        // probability 0 or 1.
        let fronts = diagonal_fronts(&[(50, 100)], 100);
        let u = line_uncertainty(&fronts, &[0.0, 0.0], &[1.0, 1.0], 100);
        assert_relative_eq!(u, 0.0);
    }

    #[test]
    fn line_uncertainty_split_at_one_point() {
        // 1 front crosses the line one grid step before the other 99: only
        // that single grid point is uncertain, with p = 0.01.
        let fronts = diagonal_fronts(&[(50, 1), (51, 99)], 100);
        let u = line_uncertainty(&fronts, &[0.0, 0.0], &[1.0, 1.0], 100);
        assert_relative_eq!(u, 0.01 * 0.99 / 100.0, epsilon = 1e-15);
        assert_relative_eq!(u, 9.9e-5, epsilon = 1e-15);
    }

    #[test]
    fn line_uncertainty_split_at_two_points() {
        // 200 fronts: 1 early, 198 middle, 1 late; two grid points carry
        // p = 0.005 and p = 0.995 respectively.
        let fronts = diagonal_fronts(&[(50, 1), (51, 198), (52, 1)], 100);
        let u = line_uncertainty(&fronts, &[0.0, 0.0], &[1.0, 1.0], 100);
        assert_relative_eq!(u, 2.0 * 0.005 * 0.995 / 100.0, epsilon = 1e-15);
        assert_relative_eq!(u, 9.95e-5, epsilon = 1e-15);
    }

    #[test]
    fn line_uncertainty_maximal_split() {
        // Half the fronts dominate everything, half dominate nothing: every
        // line point sits at p = 0.5.
        let mut fronts = vec![vec![vec![-1.0, -1.0]]; 50];
        fronts.extend(vec![vec![vec![2.0, 2.0]]; 50]);
        let u = line_uncertainty(&fronts, &[0.0, 0.0], &[1.0, 1.0], 100);
        assert_relative_eq!(u, 0.25);
    }

    #[test]
    fn volume_uncertainty_bounds_and_determinism() {
        let fronts = diagonal_fronts(&[(40, 30), (60, 70)], 100);
        let a = volume_uncertainty(&fronts, &[0.0, 0.0], &[1.0, 1.0], 5000, 9);
        let b = volume_uncertainty(&fronts, &[0.0, 0.0], &[1.0, 1.0], 5000, 9);
        assert_eq!(a, b);
        assert!((0.0..=0.25).contains(&a));
        assert!(a > 0.0);
    }

    #[test]
    fn volume_uncertainty_mc_matches_analytic() {
        // One of two fronts dominates exactly the region above (0.5, 0.5):
        // p(1-p) = 0.25 on that quarter of the unit box.
        let fronts = vec![vec![vec![0.5, 0.5]], vec![vec![1.5, 1.5]]];
        let u = volume_uncertainty(&fronts, &[0.0, 0.0], &[1.0, 1.0], 200_000, 3);
        assert_relative_eq!(u, 0.25 * 0.25, epsilon = 2e-3);
    }
}
