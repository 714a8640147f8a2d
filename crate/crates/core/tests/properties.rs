//! Randomized invariant checks for the geometric and probabilistic
//! primitives.

use proptest::prelude::*;

use cehi_core::acquisition::{ei, ehi_2d, mei, mei_with_grad};
use cehi_core::doe::{halton, maximin_lhs};
use cehi_core::ensemble::{gaussian_nd_probability, weighted_indices_without_replacement};
use cehi_core::gp::GpModel;
use cehi_core::kernel::{Kernel, KernelFamily};
use cehi_core::pareto::{
    dominates, hv_improvement, hypervolume, non_dominated, non_dominated_set, summarize,
    weakly_dominates,
};
use cehi_core::uncertainty::line_uncertainty;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

fn point_vec(m: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0..1.0f64, m), 1..n)
}

/// True when the closest front point to the Ideal-Nadir line wins by a
/// clear margin over the runner-up.
fn unique_closest(s: &cehi_core::pareto::FrontSummary) -> bool {
    let mut d2 = s.line_distances2();
    d2.sort_by(|a, b| a.partial_cmp(b).unwrap());
    d2.len() < 2 || d2[1] - d2[0] > 1e-6
}

/// Reference O(n^2) filter, independent of the library's sweep fast path.
fn brute_force_nd(points: &[Vec<f64>]) -> Vec<usize> {
    let mut keep = Vec::new();
    'outer: for (i, p) in points.iter().enumerate() {
        for (j, q) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            if dominates(q, p) || (q == p && j < i) {
                continue 'outer;
            }
        }
        keep.push(i);
    }
    keep
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn nd_fast_path_matches_brute_force_2d(pts in point_vec(2, 60)) {
        prop_assert_eq!(non_dominated(&pts), brute_force_nd(&pts));
    }

    #[test]
    fn nd_matches_brute_force_3d(pts in point_vec(3, 40)) {
        prop_assert_eq!(non_dominated(&pts), brute_force_nd(&pts));
    }

    #[test]
    fn nd_result_is_mutually_nondominated(pts in point_vec(2, 50)) {
        let nd = non_dominated_set(&pts);
        for a in &nd {
            for b in &nd {
                prop_assert!(!(a != b && dominates(a, b)));
            }
        }
    }

    #[test]
    fn removed_points_are_dominated(pts in point_vec(3, 30)) {
        let keep = non_dominated(&pts);
        for (i, p) in pts.iter().enumerate() {
            if !keep.contains(&i) {
                let covered = pts.iter().enumerate().any(|(j, q)| {
                    (j != i && dominates(q, p)) || (j < i && q == p)
                });
                prop_assert!(covered);
            }
        }
    }

    #[test]
    fn hypervolume_monotone_under_added_point(
        pts in point_vec(2, 20),
        extra in prop::collection::vec(0.0..1.0f64, 2),
    ) {
        let r = [1.5, 1.5];
        let base = hypervolume(&pts, &r);
        let mut bigger = pts.clone();
        bigger.push(extra);
        prop_assert!(hypervolume(&bigger, &r) >= base - 1e-12);
    }

    #[test]
    fn hypervolume_scales_with_objective_scaling(
        pts in point_vec(2, 15),
        a in 0.1..3.0f64,
        b in 0.1..3.0f64,
    ) {
        let r = [1.0, 1.0];
        let hv = hypervolume(&pts, &r);
        let scaled: Vec<Vec<f64>> = pts.iter().map(|p| vec![a * p[0], b * p[1]]).collect();
        let hv_scaled = hypervolume(&scaled, &[a, b]);
        prop_assert!((hv_scaled - a * b * hv).abs() < 1e-9 * (1.0 + a * b));
    }

    #[test]
    fn hv_improvement_nonnegative_and_zero_for_dominated(
        pts in point_vec(2, 15),
        y in prop::collection::vec(0.0..1.0f64, 2),
    ) {
        let r = [1.2, 1.2];
        let imp = hv_improvement(&pts, &y, &r);
        prop_assert!(imp >= 0.0);
        if pts.iter().any(|p| weakly_dominates(p, &y)) {
            prop_assert_eq!(imp, 0.0);
        }
    }

    #[test]
    fn summary_center_in_bounding_box(pts in point_vec(3, 25)) {
        let s = summarize(&pts);
        for j in 0..3 {
            prop_assert!(s.ideal[j] <= s.nadir[j] + 1e-12);
            prop_assert!(s.center[j] >= s.ideal[j] - 1e-9);
            prop_assert!(s.center[j] <= s.nadir[j] + 1e-9);
        }
    }

    #[test]
    fn summary_equivariant_under_translation(
        pts in point_vec(2, 20),
        shift in prop::collection::vec(-2.0..2.0f64, 2),
    ) {
        let s = summarize(&pts);
        // Equidistant front points make the projection ambiguous; restrict
        // to instances with a clear closest point.
        prop_assume!(unique_closest(&s));
        let moved: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| vec![p[0] + shift[0], p[1] + shift[1]])
            .collect();
        let sm = summarize(&moved);
        for j in 0..2 {
            prop_assert!((sm.ideal[j] - s.ideal[j] - shift[j]).abs() < 1e-9);
            prop_assert!((sm.nadir[j] - s.nadir[j] - shift[j]).abs() < 1e-9);
            prop_assert!((sm.center[j] - s.center[j] - shift[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn summary_equivariant_under_uniform_scaling(
        pts in point_vec(2, 20),
        a in 0.1..5.0f64,
    ) {
        let s = summarize(&pts);
        prop_assume!(unique_closest(&s));
        let scaled: Vec<Vec<f64>> = pts.iter().map(|p| vec![a * p[0], a * p[1]]).collect();
        let ss = summarize(&scaled);
        for j in 0..2 {
            prop_assert!((ss.center[j] - a * s.center[j]).abs() < 1e-9 * (1.0 + a));
        }
    }

    #[test]
    fn ei_bounds(mean in -2.0..2.0f64, sd in 0.0..2.0f64, t in -2.0..2.0f64) {
        let v = ei(mean, sd, t);
        prop_assert!(v >= (t - mean).max(0.0) - 1e-12);
        prop_assert!(v.is_finite());
    }

    #[test]
    fn ehi_2d_nonnegative_and_bounded_by_box(
        pts in point_vec(2, 12),
        mean in prop::collection::vec(0.0..1.0f64, 2),
        sd in prop::collection::vec(0.01..0.5f64, 2),
    ) {
        let r = [1.5, 1.5];
        let v = ehi_2d(&pts, &mean, &sd, &r);
        prop_assert!(v >= -1e-12);
        // EHI is at most the unconstrained product improvement.
        let cap = ei(mean[0], sd[0], r[0]) * ei(mean[1], sd[1], r[1]);
        prop_assert!(v <= cap + 1e-9);
    }

    #[test]
    fn nd_probability_in_unit_interval_and_monotone(
        pts in point_vec(2, 10),
        mean in prop::collection::vec(0.0..1.0f64, 2),
        sd in prop::collection::vec(0.05..0.5f64, 2),
    ) {
        let p = gaussian_nd_probability(&pts, &mean, &sd, 0);
        prop_assert!((0.0..=1.0).contains(&p));
        // Worsening both objectives cannot raise the ND probability.
        let worse: Vec<f64> = mean.iter().map(|v| v + 0.3).collect();
        let pw = gaussian_nd_probability(&pts, &worse, &sd, 0);
        prop_assert!(pw <= p + 1e-9);
    }

    #[test]
    fn reservoir_indices_distinct_and_in_range(
        weights in prop::collection::vec(0.0..1.0f64, 1..40),
        k in 1usize..10,
        seed in 0u64..1000,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (idx, _) = weighted_indices_without_replacement(&weights, k, &mut rng);
        prop_assert_eq!(idx.len(), k.min(weights.len()));
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), idx.len());
        prop_assert!(idx.iter().all(|&i| i < weights.len()));
    }

    #[test]
    fn halton_and_lhs_stay_in_cube(n in 1usize..200, d in 1usize..6, seed in 0u64..100) {
        for p in halton(n, d, seed) {
            prop_assert!(p.iter().all(|v| (0.0..1.0).contains(v)));
        }
        for p in maximin_lhs(n, d, seed) {
            prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn line_uncertainty_bounded(
        cut in 0.0..1.0f64,
        n_fronts in 2usize..30,
    ) {
        let mut fronts = Vec::new();
        for i in 0..n_fronts {
            let t = cut * i as f64 / n_fronts as f64;
            fronts.push(vec![vec![t, t]]);
        }
        let u = line_uncertainty(&fronts, &[0.0, 0.0], &[1.0, 1.0], 50);
        prop_assert!((0.0..=0.25 + 1e-12).contains(&u));
    }
}

proptest! {
    // GP-backed properties are costlier; fewer cases.
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gp_interpolates_and_mei_nonnegative(
        seed in 0u64..50,
        t1 in 0.0..1.0f64,
        t2 in 0.0..1.0f64,
    ) {
        let xs = maximin_lhs(10, 2, seed);
        let ys: Vec<f64> = xs.iter().map(|x| x[0] * x[0] + 0.5 * x[1]).collect();
        let k = Kernel::new(KernelFamily::Matern52, vec![0.4, 0.4], 1.0);
        let model = GpModel::with_kernel(&xs, &ys, k).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            let (mu, _) = model.predict_one(x);
            prop_assert!((mu - y).abs() < 1e-4);
        }
        let models = vec![model];
        let v = mei(&models, &[t1, t2], &[0.8]);
        prop_assert!(v >= 0.0);
        let (v2, g, _) = mei_with_grad(&models, &[t1, t2], &[0.8]);
        prop_assert!((v - v2).abs() < 1e-12);
        prop_assert!(g.iter().all(|x| x.is_finite()));
    }
}
