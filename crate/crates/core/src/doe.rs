//! Space-filling designs: Halton pools with a random shift and a
//! maximin-improved Latin hypercube for the initial design.

use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [usize; 20] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
];

/// Radical-inverse of `i` in base `b`.
fn radical_inverse(mut i: usize, b: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let bf = b as f64;
    while i > 0 {
        f /= bf;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// `n` Halton points in [0,1)^d with a seeded Cranley-Patterson rotation
/// (per-dimension modulo-1 shift) so different seeds give different pools
/// while keeping the low-discrepancy structure.
pub fn halton(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(d <= PRIMES.len(), "halton supports up to {} dims", PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
    (0..n)
        .map(|i| {
            (0..d)
                .map(|j| {
                    // skip the first point (all zeros) of the raw sequence
                    let v = radical_inverse(i + 1, PRIMES[j]) + shift[j];
                    v - v.floor()
                })
                .collect()
        })
        .collect()
}

fn min_dist2(pts: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let d2: f64 = pts[i]
                .iter()
                .zip(&pts[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            best = best.min(d2);
        }
    }
    best
}

/// Latin hypercube of `n` points in [0,1]^d, improved toward a maximin
/// design by keeping the best of several random LHS draws followed by
/// column-swap hill climbing.
pub fn maximin_lhs(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(n >= 1 && d >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
        for _ in 0..d {
            let mut levels: Vec<f64> = (0..n)
                .map(|k| (k as f64 + rng.gen::<f64>()) / n as f64)
                .collect();
            levels.shuffle(rng);
            cols.push(levels);
        }
        (0..n).map(|i| (0..d).map(|j| cols[j][i]).collect()).collect()
    };

    let mut best = draw(&mut rng);
    let mut best_d2 = min_dist2(&best);
    for _ in 0..9 {
        let cand = draw(&mut rng);
        let d2 = min_dist2(&cand);
        if d2 > best_d2 {
            best = cand;
            best_d2 = d2;
        }
    }
    // Hill climb: swap one column entry between two rows, keep improvements.
    for _ in 0..200 {
        if n < 2 {
            break;
        }
        let i = rng.gen_range(0..n);
        let mut k = rng.gen_range(0..n);
        while k == i {
            k = rng.gen_range(0..n);
        }
        let j = rng.gen_range(0..d);
        let mut cand = best.clone();
        let tmp = cand[i][j];
        cand[i][j] = cand[k][j];
        cand[k][j] = tmp;
        let d2 = min_dist2(&cand);
        if d2 > best_d2 {
            best = cand;
            best_d2 = d2;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_in_unit_cube_and_deterministic() {
        let a = halton(100, 4, 11);
        let b = halton(100, 4, 11);
        assert_eq!(a, b);
        for p in &a {
            assert!(p.iter().all(|v| (0.0..1.0).contains(v)));
        }
    }

    #[test]
    fn halton_seed_changes_shift() {
        assert_ne!(halton(10, 2, 1), halton(10, 2, 2));
    }

    #[test]
    fn halton_base2_unshifted_structure() {
        // Without a shift the base-2 column is 1/2, 1/4, 3/4, ...; a shifted
        // column preserves gaps modulo 1, so pairwise differences match.
        let pts = halton(4, 1, 3);
        let raw = [0.5, 0.25, 0.75, 0.125];
        for i in 1..4 {
            let want = raw[i] - raw[0];
            let got = pts[i][0] - pts[0][0];
            let wrapped = (got - want).rem_euclid(1.0);
            assert!(wrapped < 1e-12 || wrapped > 1.0 - 1e-12);
        }
    }

    #[test]
    fn halton_equidistribution_rough() {
        let pts = halton(2000, 2, 5);
        let in_lower: usize = pts.iter().filter(|p| p[0] < 0.5).count();
        assert!((in_lower as f64 / 2000.0 - 0.5).abs() < 0.02);
    }

    #[test]
    fn lhs_is_latin() {
        let n = 20;
        let pts = maximin_lhs(n, 3, 7);
        assert_eq!(pts.len(), n);
        for j in 0..3 {
            let mut bins = vec![0usize; n];
            for p in &pts {
                assert!((0.0..=1.0).contains(&p[j]));
                bins[((p[j] * n as f64) as usize).min(n - 1)] += 1;
            }
            assert!(bins.iter().all(|&c| c == 1), "column {j} not stratified");
        }
    }

    #[test]
    fn lhs_deterministic_per_seed() {
        assert_eq!(maximin_lhs(10, 2, 42), maximin_lhs(10, 2, 42));
        assert_ne!(maximin_lhs(10, 2, 42), maximin_lhs(10, 2, 43));
    }

    #[test]
    fn maximin_beats_typical_random_lhs() {
        let best = min_dist2(&maximin_lhs(15, 2, 1));
        // A plain random LHS (single draw, no improvement) from a throwaway
        // seed should rarely beat the improved design.
        let mut rng = ChaCha8Rng::seed_from_u64(999);
        let mut cols: Vec<Vec<f64>> = Vec::new();
        for _ in 0..2 {
            let mut levels: Vec<f64> =
                (0..15).map(|k| (k as f64 + rng.gen::<f64>()) / 15.0).collect();
            levels.shuffle(&mut rng);
            cols.push(levels);
        }
        let plain: Vec<Vec<f64>> =
            (0..15).map(|i| vec![cols[0][i], cols[1][i]]).collect();
        assert!(best >= min_dist2(&plain));
    }
}
