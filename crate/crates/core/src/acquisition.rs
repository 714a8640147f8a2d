//! Improvement-based acquisition criteria: expected improvement per
//! objective, the multiplicative EI used to pull iterates toward a target,
//! and expected hypervolume improvement (exact in 2D, Monte-Carlo above).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::doe::halton;
use crate::gp::GpModel;
use crate::opt::{gradient_ascent, nelder_mead};
use crate::pareto::{hv_improvement, non_dominated_set, weakly_dominates};

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).unwrap()
}

/// Expected improvement below `target` for a Gaussian with the given
/// moments. Degenerates to `max(target - mean, 0)` at zero spread.
pub fn ei(mean: f64, sd: f64, target: f64) -> f64 {
    if sd <= 1e-14 {
        return (target - mean).max(0.0);
    }
    let u = (target - mean) / sd;
    let n = std_normal();
    (target - mean) * n.cdf(u) + sd * n.pdf(u)
}

/// Partial derivatives of EI with respect to the predictive mean and sd.
pub fn ei_partials(mean: f64, sd: f64, target: f64) -> (f64, f64) {
    if sd <= 1e-14 {
        let d_mean = if target > mean { -1.0 } else { 0.0 };
        return (d_mean, 0.0);
    }
    let u = (target - mean) / sd;
    let n = std_normal();
    (-n.cdf(u), n.pdf(u))
}

/// Multiplicative expected improvement toward `target` across independent
/// objective models.
pub fn mei(models: &[GpModel], x: &[f64], target: &[f64]) -> f64 {
    models
        .iter()
        .zip(target)
        .map(|(m, &t)| {
            let (mean, sd) = m.predict_one(x);
            ei(mean, sd, t)
        })
        .product()
}

/// mEI value and gradient; `flat` is true when the value underflows to zero.
pub fn mei_with_grad(models: &[GpModel], x: &[f64], target: &[f64]) -> (f64, Vec<f64>, bool) {
    let d = x.len();
    let m = models.len();
    let mut eis = Vec::with_capacity(m);
    let mut grads = Vec::with_capacity(m);
    for (model, &t) in models.iter().zip(target) {
        let (mean, sd, dmean, dsd) = model.predict_grad(x);
        let v = ei(mean, sd, t);
        let (de_dm, de_ds) = ei_partials(mean, sd, t);
        let g: Vec<f64> = (0..d).map(|l| de_dm * dmean[l] + de_ds * dsd[l]).collect();
        eis.push(v);
        grads.push(g);
    }
    let value: f64 = eis.iter().product();
    let mut grad = vec![0.0; d];
    for j in 0..m {
        let others: f64 = (0..m).filter(|&k| k != j).map(|k| eis[k]).product();
        for l in 0..d {
            grad[l] += others * grads[j][l];
        }
    }
    (value, grad, value <= 0.0)
}

/// Exact 2D expected hypervolume improvement for independent Gaussian
/// marginals, by decomposing the non-dominated region below `ref_point`
/// into vertical strips bounded by the front staircase.
pub fn ehi_2d(front: &[Vec<f64>], mean: &[f64], sd: &[f64], ref_point: &[f64]) -> f64 {
    assert_eq!(mean.len(), 2);
    // Only front points weakly dominating the reference point carve the box.
    let mut pts: Vec<Vec<f64>> = front
        .iter()
        .filter(|p| weakly_dominates(p, ref_point))
        .cloned()
        .collect();
    if pts.is_empty() {
        return ei(mean[0], sd[0], ref_point[0]) * ei(mean[1], sd[1], ref_point[1]);
    }
    pts = non_dominated_set(&pts);
    pts.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());

    let e1 = |t: f64| ei(mean[0], sd[0], t);
    let e2 = |t: f64| ei(mean[1], sd[1], t);
    let k = pts.len();
    let mut total = e1(pts[0][0]) * e2(ref_point[1]);
    for i in 0..k - 1 {
        total += (e1(pts[i + 1][0]) - e1(pts[i][0])) * e2(pts[i][1]);
    }
    total += (e1(ref_point[0]) - e1(pts[k - 1][0])) * e2(pts[k - 1][1]);
    total
}

/// Monte-Carlo expected hypervolume improvement for any number of
/// objectives. Deterministic given `seed`.
pub fn ehi_mc(
    front: &[Vec<f64>],
    mean: &[f64],
    sd: &[f64],
    ref_point: &[f64],
    n_samples: usize,
    seed: u64,
) -> f64 {
    let m = mean.len();
    let nd = non_dominated_set(front);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    let mut y = vec![0.0; m];
    for _ in 0..n_samples {
        for j in 0..m {
            let z: f64 = rng.sample(StandardNormal);
            y[j] = mean[j] + sd[j] * z;
        }
        acc += hv_improvement(&nd, &y, ref_point);
    }
    acc / n_samples as f64
}

/// EHI at `x` under the objective models: exact for two objectives,
/// Monte-Carlo otherwise.
pub fn ehi(
    models: &[GpModel],
    x: &[f64],
    front: &[Vec<f64>],
    ref_point: &[f64],
    mc_samples: usize,
    seed: u64,
) -> f64 {
    let (mean, sd): (Vec<f64>, Vec<f64>) =
        models.iter().map(|m| m.predict_one(x)).unzip();
    if models.len() == 2 {
        ehi_2d(front, &mean, &sd, ref_point)
    } else {
        ehi_mc(front, &mean, &sd, ref_point, mc_samples, seed)
    }
}

/// Which criterion `maximize` should optimize.
#[derive(Debug, Clone)]
pub enum AcquisitionSpec {
    /// Multiplicative EI toward a target (the estimated center).
    Mei { target: Vec<f64> },
    /// Expected hypervolume improvement w.r.t. a front and reference point.
    Ehi {
        front: Vec<Vec<f64>>,
        ref_point: Vec<f64>,
        mc_samples: usize,
    },
}

/// Result of an acquisition maximization.
#[derive(Debug, Clone)]
pub struct AcquisitionResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// True when the criterion was flat over the candidate pool and the
    /// point was chosen by maximum predictive spread instead.
    pub flat: bool,
}

/// Maximize the criterion over [0,1]^d: score a Halton candidate pool, then
/// refine the best few candidates with a local optimizer. A flat criterion
/// falls back to the candidate with the largest total predictive sd.
pub fn maximize(
    models: &[GpModel],
    spec: &AcquisitionSpec,
    n_candidates: usize,
    seed: u64,
) -> AcquisitionResult {
    let d = models[0].dim();
    let pool = halton(n_candidates, d, seed);
    let score = |x: &[f64]| -> f64 {
        match spec {
            AcquisitionSpec::Mei { target } => mei(models, x, target),
            AcquisitionSpec::Ehi {
                front,
                ref_point,
                mc_samples,
            } => ehi(models, x, front, ref_point, *mc_samples, seed ^ 0x5eed),
        }
    };

    let mut scored: Vec<(usize, f64)> = pool
        .iter()
        .enumerate()
        .map(|(i, x)| (i, score(x)))
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());

    if scored[0].1 <= 0.0 {
        // Flat criterion: fall back to the most uncertain candidate.
        let mut best_i = 0;
        let mut best_s = f64::NEG_INFINITY;
        for (i, x) in pool.iter().enumerate() {
            let s: f64 = models.iter().map(|m| m.predict_one(x).1).sum();
            if s > best_s {
                best_s = s;
                best_i = i;
            }
        }
        return AcquisitionResult {
            x: pool[best_i].clone(),
            value: 0.0,
            flat: true,
        };
    }

    let bounds: Vec<(f64, f64)> = vec![(0.0, 1.0); d];
    let mut best_x = pool[scored[0].0].clone();
    let mut best_v = scored[0].1;
    for &(i, v0) in scored.iter().take(5) {
        if v0 <= 0.0 {
            break;
        }
        let x0 = &pool[i];
        let (x, v) = match spec {
            AcquisitionSpec::Mei { target } => gradient_ascent(
                |x| {
                    let (v, g, _) = mei_with_grad(models, x, target);
                    (v, g)
                },
                x0,
                &bounds,
                60,
            ),
            AcquisitionSpec::Ehi { .. } => {
                let (x, neg) = nelder_mead(|x| -score(x), x0, 0.05, &bounds, 120);
                (x, -neg)
            }
        };
        if v > best_v {
            best_v = v;
            best_x = x;
        }
    }
    AcquisitionResult {
        x: best_x,
        value: best_v,
        flat: false,
    }
}
