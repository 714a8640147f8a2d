//! Ideal/Nadir/center estimation from conditional GP simulations: a large
//! Halton pool is scored under the posterior, a small simulation support is
//! importance-sampled toward the likely extremes of the front, joint draws
//! are taken at the support, and the front statistics come from the draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::doe::halton;
use crate::error::Result;
use crate::gp::{GpModel, Posterior};
use crate::pareto::{line_distance2, non_dominated_set, summarize, FrontSummary};

/// Front size above which the exact inclusion-exclusion domination
/// probability (2^k terms) gives way to Monte-Carlo.
const INCL_EXCL_MAX_FRONT: usize = 12;
const ND_MC_SAMPLES: usize = 1000;

fn std_cdf(u: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(u)
}

/// Phi((t - mean) / sd), degenerating to a step at sd = 0.
fn prob_below(mean: f64, sd: f64, t: f64) -> f64 {
    if sd <= 1e-14 {
        return if mean <= t { 1.0 } else { 0.0 };
    }
    std_cdf((t - mean) / sd)
}

/// Probability that an independent Gaussian vector is NOT weakly dominated
/// by any point of `front`. Exact for one and two objectives, exact by
/// inclusion-exclusion for small fronts, Monte-Carlo otherwise.
pub fn gaussian_nd_probability(
    front: &[Vec<f64>],
    mean: &[f64],
    sd: &[f64],
    seed: u64,
) -> f64 {
    if front.is_empty() {
        return 1.0;
    }
    let m = mean.len();
    let nd = non_dominated_set(front);
    match m {
        1 => {
            // Pr(not dominated) = Pr(Y < best); the boundary has measure
            // zero for sd > 0.
            let best = nd.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            prob_below(mean[0], sd[0], best)
        }
        2 => {
            let mut pts = nd;
            pts.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
            let mut dominated = 0.0;
            for (i, p) in pts.iter().enumerate() {
                let next = if i + 1 < pts.len() {
                    prob_below(mean[0], sd[0], pts[i + 1][0])
                } else {
                    1.0
                };
                let cur = prob_below(mean[0], sd[0], p[0]);
                dominated += (next - cur) * (1.0 - prob_below(mean[1], sd[1], p[1]));
            }
            (1.0 - dominated).clamp(0.0, 1.0)
        }
        _ if nd.len() <= INCL_EXCL_MAX_FRONT => {
            let k = nd.len();
            let mut dominated = 0.0;
            for mask in 1u32..(1 << k) {
                let mut upper = vec![f64::NEG_INFINITY; m];
                for (i, p) in nd.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        for j in 0..m {
                            upper[j] = upper[j].max(p[j]);
                        }
                    }
                }
                let term: f64 = (0..m)
                    .map(|j| 1.0 - prob_below(mean[j], sd[j], upper[j]))
                    .product();
                if mask.count_ones() % 2 == 1 {
                    dominated += term;
                } else {
                    dominated -= term;
                }
            }
            (1.0 - dominated).clamp(0.0, 1.0)
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut nd_hits = 0usize;
            let mut y = vec![0.0; m];
            for _ in 0..ND_MC_SAMPLES {
                for j in 0..m {
                    let z: f64 = rng.sample(StandardNormal);
                    y[j] = mean[j] + sd[j] * z;
                }
                if !nd.iter().any(|p| p.iter().zip(&y).all(|(a, b)| a <= b)) {
                    nd_hits += 1;
                }
            }
            nd_hits as f64 / ND_MC_SAMPLES as f64
        }
    }
}

/// Weighted sampling of `k` distinct indices without replacement
/// (Efraimidis-Spirakis keys). Zero-weight items are drawn only if fewer
/// than `k` positive weights exist; a fully degenerate weight vector falls
/// back to uniform sampling and reports it.
pub fn weighted_indices_without_replacement(
    weights: &[f64],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, bool) {
    let n = weights.len();
    let k = k.min(n);
    let total: f64 = weights.iter().filter(|w| w.is_finite() && **w > 0.0).sum();
    if total <= 0.0 {
        // uniform without replacement via partial Fisher-Yates
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = rng.gen_range(i..n);
            idx.swap(i, j);
        }
        idx.truncate(k);
        return (idx, true);
    }
    let mut keyed: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let w = if w.is_finite() && w > 0.0 { w } else { 0.0 };
            let u: f64 = rng.gen_range(1e-300..1.0);
            // ln(u)/w is monotone in the Efraimidis-Spirakis key u^(1/w);
            // zero-weight items rank below every positive-weight item, in
            // random order rather than by index.
            let key = if w > 0.0 {
                u.ln() / w
            } else {
                -1.7e308 + u * 1e307
            };
            (key, i)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    (keyed.into_iter().take(k).map(|(_, i)| i).collect(), false)
}

/// Posterior over the candidate pool, one entry per objective.
pub struct PoolPosterior {
    pub pool: Vec<Vec<f64>>,
    pub mean: Vec<Vec<f64>>, // [objective][point]
    pub sd: Vec<Vec<f64>>,
}

pub fn pool_posterior(models: &[GpModel], pool_size: usize, seed: u64) -> PoolPosterior {
    let d = models[0].dim();
    let pool = halton(pool_size, d, seed);
    let mut mean = Vec::with_capacity(models.len());
    let mut sd = Vec::with_capacity(models.len());
    for m in models {
        let Posterior { mean: mu, sd: s, .. } = m.predict(&pool, false);
        mean.push(mu);
        sd.push(s);
    }
    PoolPosterior { pool, mean, sd }
}

/// Simulation support chosen from the pool, with bookkeeping flags.
pub struct SupportSelection {
    pub indices: Vec<usize>,
    /// True when some weight vector was degenerate and uniform sampling was
    /// used for that component.
    pub uniform_fallback: bool,
}

/// Importance-sample the simulation support: for each objective, points
/// likely to improve the empirical Ideal component and points likely to sit
/// near the Nadir component, `per_component` of each.
pub fn select_support(
    post: &PoolPosterior,
    empirical: &FrontSummary,
    per_component: usize,
    rng: &mut ChaCha8Rng,
) -> SupportSelection {
    let m = post.mean.len();
    let n = post.pool.len();
    let mut chosen = std::collections::BTreeSet::new();
    let mut uniform_fallback = false;

    for j in 0..m {
        // Ideal component j: probability of improving the empirical minimum.
        let w_ideal: Vec<f64> = (0..n)
            .map(|i| prob_below(post.mean[j][i], post.sd[j][i], empirical.ideal[j]))
            .collect();
        let (idx, fell) = weighted_indices_without_replacement(&w_ideal, per_component, rng);
        uniform_fallback |= fell;
        chosen.extend(idx);

        // Nadir component j: either non-dominated in the other objectives
        // while exceeding the current extreme point in j, or dominating the
        // extreme point outright.
        let nu = &empirical.extreme_points[j];
        let front_wo_j: Vec<Vec<f64>> = empirical
            .front
            .iter()
            .map(|p| {
                p.iter()
                    .enumerate()
                    .filter(|(jj, _)| *jj != j)
                    .map(|(_, v)| *v)
                    .collect()
            })
            .collect();
        let w_nadir: Vec<f64> = (0..n)
            .map(|i| {
                let mean_wo: Vec<f64> = (0..m).filter(|jj| *jj != j).map(|jj| post.mean[jj][i]).collect();
                let sd_wo: Vec<f64> = (0..m).filter(|jj| *jj != j).map(|jj| post.sd[jj][i]).collect();
                let p_nd = gaussian_nd_probability(
                    &front_wo_j,
                    &mean_wo,
                    &sd_wo,
                    0x6ad1 ^ (i as u64) << 8 ^ j as u64,
                );
                let p_above = 1.0 - prob_below(post.mean[j][i], post.sd[j][i], nu[j]);
                let p_dom_extreme: f64 = (0..m)
                    .map(|jj| prob_below(post.mean[jj][i], post.sd[jj][i], nu[jj]))
                    .product();
                p_nd * p_above + p_dom_extreme
            })
            .collect();
        let (idx, fell) = weighted_indices_without_replacement(&w_nadir, per_component, rng);
        uniform_fallback |= fell;
        chosen.extend(idx);
    }

    SupportSelection {
        indices: chosen.into_iter().collect(),
        uniform_fallback,
    }
}

/// Roulette-wheel selection of simulation support for the domination field:
/// pool points weighted by their probability of being non-dominated with
/// respect to the empirical front. Extreme-targeted supports under-sample
/// the middle of the front and make the domination probability unreliable
/// exactly where convergence must be judged.
pub fn select_nd_candidates(
    post: &PoolPosterior,
    front: &[Vec<f64>],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, bool) {
    let m = post.mean.len();
    let n = post.pool.len();
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            let mean: Vec<f64> = (0..m).map(|j| post.mean[j][i]).collect();
            let sd: Vec<f64> = (0..m).map(|j| post.sd[j][i]).collect();
            gaussian_nd_probability(front, &mean, &sd, 0x11d ^ (i as u64) << 4)
        })
        .collect();
    weighted_indices_without_replacement(&weights, k, rng)
}

/// Joint conditional draws of every objective at `support`, stacked into
/// objective vectors and ND-filtered per draw. `extra` points (typically the
/// observed front, which every realization of the true front dominates) are
/// appended to each draw before filtering.
pub fn simulate_fronts(
    models: &[GpModel],
    support: &[Vec<f64>],
    n_sim: usize,
    seed: u64,
    extra: &[Vec<f64>],
) -> Result<Vec<Vec<Vec<f64>>>> {
    let m = models.len();
    let mut sims: Vec<Vec<Vec<f64>>> = Vec::with_capacity(m);
    for (j, model) in models.iter().enumerate() {
        let s = model.simulate(
            support,
            n_sim,
            seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(j as u64),
        )?;
        sims.push(s);
    }
    let mut fronts = Vec::with_capacity(n_sim);
    for t in 0..n_sim {
        let mut pts: Vec<Vec<f64>> = (0..support.len())
            .map(|i| (0..m).map(|j| sims[j][t][i]).collect())
            .collect();
        pts.extend(extra.iter().cloned());
        fronts.push(non_dominated_set(&pts));
    }
    Ok(fronts)
}

/// Improvement-ratio threshold for discarding spurious extreme points: a
/// candidate extreme is ignored when another front point concedes at least
/// this many times less (range-normalized) in the other objectives than it
/// gains in the extreme one.
const EXTREME_RATIO: f64 = 20.0;

fn trimmed_max_component(front: &[Vec<f64>], j: usize, range: &[f64]) -> f64 {
    let m = front[0].len();
    let mut best = f64::NEG_INFINITY;
    'points: for p in front {
        for q in front {
            let gain = (p[j] - q[j]) / range[j];
            if gain <= 0.0 {
                continue;
            }
            // Mutual non-domination makes the concession positive whenever
            // the gain is.
            let concession = (0..m)
                .filter(|&jj| jj != j)
                .map(|jj| ((q[jj] - p[jj]) / range[jj]).max(0.0))
                .fold(0.0f64, f64::max);
            if gain > EXTREME_RATIO * concession {
                continue 'points;
            }
        }
        best = best.max(p[j]);
    }
    // The front point minimizing coordinate j can never be discarded, so
    // the maximum is always finite.
    best
}

/// Component-wise maxima of a front, ignoring points whose extremality is
/// an artifact of the finite support. In a finite non-dominated sample, a
/// point with a microscopic edge in one objective can carry an arbitrarily
/// bad value in another and inflate the Nadir estimate; such a point is
/// discarded when some other front point improves the extreme objective by
/// far more (range-normalized) than it concedes anywhere else, so shallow
/// but genuine front tails survive. Two passes: the first uses the raw
/// component ranges, which an inflated extreme can distort, so the second
/// re-normalizes by the trimmed ranges.
fn trimmed_nadir(front: &[Vec<f64>]) -> Vec<f64> {
    let m = front[0].len();
    let mins: Vec<f64> = (0..m)
        .map(|j| front.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min))
        .collect();
    let mut maxs: Vec<f64> = (0..m)
        .map(|j| front.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    for _ in 0..2 {
        let range: Vec<f64> = (0..m).map(|j| (maxs[j] - mins[j]).max(1e-12)).collect();
        maxs = (0..m).map(|j| trimmed_max_component(front, j, &range)).collect();
    }
    maxs
}

/// Result of one ensemble pass: the simulated fronts plus the Ideal, Nadir
/// and center estimates derived from them.
#[derive(Debug, Clone)]
pub struct CenterEstimate {
    pub ideal: Vec<f64>,
    pub nadir: Vec<f64>,
    pub center: Vec<f64>,
    /// One simulated front per draw, in objective space.
    pub fronts: Vec<Vec<Vec<f64>>>,
    pub uniform_fallback: bool,
    /// True when no simulated front point was non-dominated with respect to
    /// the observed front and the filter was dropped.
    pub nd_filter_dropped: bool,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Settings for one ensemble pass.
#[derive(Debug, Clone, Copy)]
pub struct EnsembleSettings {
    pub n_sim: usize,
    pub sim_points: usize,
    pub pool_size: usize,
}

/// Estimate the Ideal and Nadir points and the front center by conditional
/// simulation. `observed` holds the objective vectors evaluated so far.
pub fn estimate_center(
    models: &[GpModel],
    observed: &[Vec<f64>],
    settings: &EnsembleSettings,
    seed: u64,
) -> Result<CenterEstimate> {
    let empirical = summarize(observed);
    let post = pool_posterior(models, settings.pool_size, seed);
    estimate_center_from_post(models, &post, &empirical, settings, seed)
}

fn estimate_center_from_post(
    models: &[GpModel],
    post: &PoolPosterior,
    empirical: &FrontSummary,
    settings: &EnsembleSettings,
    seed: u64,
) -> Result<CenterEstimate> {
    let m = models.len();
    let per_component = (settings.sim_points / (2 * m)).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5e1e_c705);
    let support_sel = select_support(post, empirical, per_component, &mut rng);
    let support: Vec<Vec<f64>> = support_sel
        .indices
        .iter()
        .map(|&i| post.pool[i].clone())
        .collect();

    // Observed front points ride along in every draw: they are exact front
    // knowledge and anchor the extreme-point trim where the simulated
    // support is sparse.
    let fronts = simulate_fronts(models, &support, settings.n_sim, seed, &empirical.front)?;

    let per_draw_nadir: Vec<Vec<f64>> = fronts.iter().map(|f| trimmed_nadir(f)).collect();
    let mut ideal = vec![0.0; m];
    let mut nadir = vec![0.0; m];
    for j in 0..m {
        let mut mins: Vec<f64> = fronts
            .iter()
            .map(|f| f.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min))
            .collect();
        let mut maxs: Vec<f64> = per_draw_nadir.iter().map(|n| n[j]).collect();
        ideal[j] = median(&mut mins);
        nadir[j] = median(&mut maxs).max(ideal[j] + 1e-9);
    }

    // Center: per draw, the projection parameter of the front point closest
    // to the Ideal-Nadir line (restricted to points non-dominated w.r.t.
    // the observed front); the estimate aggregates the draws by median,
    // which is robust to individual optimistic simulations.
    let mut nd_filter_dropped = false;
    let mut ts: Vec<f64> = Vec::with_capacity(fronts.len());
    for pass in 0..2 {
        for front in &fronts {
            let mut best: Option<(f64, f64)> = None; // (d2, t)
            for p in front {
                if pass == 0
                    && empirical
                        .front
                        .iter()
                        .any(|q| q != p && q.iter().zip(p).all(|(a, b)| a <= b))
                {
                    continue;
                }
                let (d2, t) = line_distance2(p, &ideal, &nadir);
                if best.as_ref().map_or(true, |(bd, _)| d2 < *bd) {
                    best = Some((d2, t));
                }
            }
            if let Some((_, t)) = best {
                ts.push(t);
            }
        }
        if !ts.is_empty() {
            break;
        }
        nd_filter_dropped = true;
    }
    assert!(!ts.is_empty(), "ensemble produced no front points");
    let t = median(&mut ts).clamp(0.0, 1.0);
    let center: Vec<f64> = (0..m)
        .map(|j| (1.0 - t) * ideal[j] + t * nadir[j])
        .collect();

    Ok(CenterEstimate {
        ideal,
        nadir,
        center,
        fronts,
        uniform_fallback: support_sel.uniform_fallback,
        nd_filter_dropped,
    })
}

/// One full estimation pass: the extreme-targeted ensemble behind the
/// Ideal/Nadir/center estimates plus a separate ND-targeted ensemble for
/// the domination field used by the convergence tests. Both share one pool
/// posterior.
pub struct EnsemblePass {
    pub center: CenterEstimate,
    /// Simulated fronts from the ND-roulette support, each draw augmented
    /// with the observed front.
    pub uncertainty_fronts: Vec<Vec<Vec<f64>>>,
    /// True when the ND weights were degenerate and the support fell back
    /// to uniform sampling.
    pub nd_uniform_fallback: bool,
}

pub fn ensemble_pass(
    models: &[GpModel],
    observed: &[Vec<f64>],
    settings: &EnsembleSettings,
    seed: u64,
) -> Result<EnsemblePass> {
    let empirical = summarize(observed);
    let post = pool_posterior(models, settings.pool_size, seed);
    let center = estimate_center_from_post(models, &post, &empirical, settings, seed)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0dd5_ca7e);
    let (indices, nd_uniform_fallback) =
        select_nd_candidates(&post, &empirical.front, settings.sim_points, &mut rng);
    let support: Vec<Vec<f64>> = indices.iter().map(|&i| post.pool[i].clone()).collect();
    let uncertainty_fronts = simulate_fronts(
        models,
        &support,
        settings.n_sim,
        seed ^ 0x7f1e_55,
        &empirical.front,
    )?;

    Ok(EnsemblePass {
        center,
        uncertainty_fronts,
        nd_uniform_fallback,
    })
}
