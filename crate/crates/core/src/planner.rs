//! Choosing how far to widen the targeted region once the center has
//! converged: virtual Kriging-Believer runs decide the largest slice of the
//! center-to-Nadir segment that the remaining budget can still resolve.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::acquisition::{maximize, AcquisitionSpec};
use crate::config::RunConfig;
use crate::ensemble::{pool_posterior, select_nd_candidates, simulate_fronts};
use crate::error::Result;
use crate::gp::GpModel;
use crate::uncertainty::volume_uncertainty;

/// Reference points stepping from the center toward the Nadir:
/// R^c = C + (c / steps)(N - C) for c = 1..=steps.
pub fn candidate_refs(center: &[f64], nadir: &[f64], steps: usize) -> Vec<Vec<f64>> {
    (1..=steps)
        .map(|c| {
            let a = c as f64 / steps as f64;
            center
                .iter()
                .zip(nadir)
                .map(|(cc, nn)| cc + a * (nn - cc))
                .collect()
        })
        .collect()
}

/// Run `budget` virtual evaluations toward `ref_point` (each new point gets
/// its posterior mean as the believed value), then measure the remaining
/// domination uncertainty over the box [ideal, ref_point]. `front` is the
/// observed non-dominated set.
pub fn rollout_uncertainty(
    models: &[GpModel],
    front: &[Vec<f64>],
    ideal: &[f64],
    ref_point: &[f64],
    budget: usize,
    cfg: &RunConfig,
    seed: u64,
) -> Result<f64> {
    let mut believers: Vec<GpModel> = models.to_vec();
    let mut virtual_front: Vec<Vec<f64>> = front.to_vec();
    for step in 0..budget {
        let spec = AcquisitionSpec::Ehi {
            front: virtual_front.clone(),
            ref_point: ref_point.to_vec(),
            mc_samples: cfg.ehi_mc_samples,
        };
        let res = maximize(
            &believers,
            &spec,
            cfg.acq_candidates.min(500),
            seed.wrapping_add(step as u64),
        );
        let mut next = Vec::with_capacity(believers.len());
        let mut believed = Vec::with_capacity(believers.len());
        for m in &believers {
            let (mean, _) = m.predict_one(&res.x);
            believed.push(mean);
            next.push(m.augment(&res.x, mean)?);
        }
        virtual_front.push(believed);
        virtual_front = crate::pareto::non_dominated_set(&virtual_front);
        believers = next;
    }

    // Cheap uncertainty read-out: ND-roulette support over a reduced pool,
    // smaller draw count and Monte-Carlo size than the main ensemble.
    let n_sim = (cfg.n_sim / 2).max(50);
    let pool = (cfg.pool_size / 8).max(cfg.rollout_sim_points);
    let post = pool_posterior(&believers, pool, seed ^ 0x5071);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2b07);
    let (indices, _) = select_nd_candidates(&post, front, cfg.rollout_sim_points, &mut rng);
    let support: Vec<Vec<f64>> = indices.iter().map(|&i| post.pool[i].clone()).collect();
    let fronts = simulate_fronts(&believers, &support, n_sim, seed ^ 0xf00d, front)?;
    Ok(volume_uncertainty(
        &fronts,
        ideal,
        ref_point,
        cfg.rollout_volume_samples,
        seed ^ 0x70e5,
    ))
}

/// The phase-2 decision: which reference point to target with the rest of
/// the budget.
#[derive(Debug, Clone)]
pub struct Phase2Plan {
    pub ref_point: Vec<f64>,
    /// Step index on the center-to-Nadir segment (0 = stay at the center).
    pub step: usize,
    /// True when no widened region passed the uncertainty test and the
    /// search stays at the center.
    pub fallback: bool,
    /// Rollout uncertainty of the chosen region.
    pub uncertainty: f64,
}

/// Pick the widest region the remaining budget can resolve: the largest
/// step c whose Kriging-Believer rollout ends below the volume-uncertainty
/// threshold. Falls back to the center when none qualifies.
pub fn select_ref(
    models: &[GpModel],
    front: &[Vec<f64>],
    ideal: &[f64],
    center: &[f64],
    nadir: &[f64],
    remaining_budget: usize,
    cfg: &RunConfig,
    seed: u64,
) -> Result<Phase2Plan> {
    let refs = candidate_refs(center, nadir, cfg.ref_steps);
    for c in (1..=cfg.ref_steps).rev() {
        let r = &refs[c - 1];
        let u = rollout_uncertainty(
            models,
            front,
            ideal,
            r,
            remaining_budget,
            cfg,
            seed.wrapping_mul(31).wrapping_add(c as u64),
        )?;
        if u < cfg.eps_volume {
            return Ok(Phase2Plan {
                ref_point: r.clone(),
                step: c,
                fallback: false,
                uncertainty: u,
            });
        }
    }
    let u = rollout_uncertainty(
        models,
        front,
        ideal,
        center,
        remaining_budget,
        cfg,
        seed.wrapping_mul(31),
    )?;
    Ok(Phase2Plan {
        ref_point: center.to_vec(),
        step: 0,
        fallback: true,
        uncertainty: u,
    })
}
