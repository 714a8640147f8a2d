//! The two-phase optimization loop: center-targeting search with
//! convergence detection, followed by budgeted widening of the target
//! region.

use serde::{Deserialize, Serialize};

use crate::acquisition::{maximize, AcquisitionSpec};
use crate::config::RunConfig;
use crate::doe::maximin_lhs;
use crate::ensemble::{ensemble_pass, estimate_center, CenterEstimate, EnsembleSettings};
use crate::error::Result;
use crate::gp::GpModel;
use crate::kernel::Kernel;
use crate::pareto::{line_distance2, non_dominated_set, summarize, weakly_dominates};
use crate::planner::{select_ref, Phase2Plan};
use crate::problems::Problem;
use crate::uncertainty::line_uncertainty;

/// Which stage produced an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Init,
    CenterSearch,
    Widening,
    EhiBaseline,
}

/// One evaluation with the estimator state that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterRow {
    pub eval: usize,
    pub phase: Phase,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub target: Option<Vec<f64>>,
    pub ideal: Option<Vec<f64>>,
    pub nadir: Option<Vec<f64>>,
    pub line_uncertainty: Option<f64>,
    pub acq_value: Option<f64>,
    pub acq_flat: bool,
}

/// Everything produced by a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunState {
    pub config: RunConfig,
    pub inputs: Vec<Vec<f64>>,
    pub objectives: Vec<Vec<f64>>,
    pub rows: Vec<IterRow>,
    /// Evaluation count at which the center search converged, if it did.
    pub converged_at: Option<usize>,
    /// Step chosen on the center-to-Nadir segment in the widening phase.
    pub phase2_step: Option<usize>,
    pub phase2_fallback: bool,
    pub center: Vec<f64>,
    pub ideal: Vec<f64>,
    pub nadir: Vec<f64>,
    /// Non-dominated subset of all evaluations.
    pub front: Vec<Vec<f64>>,
}

fn fit_models(
    inputs: &[Vec<f64>],
    objectives: &[Vec<f64>],
    cfg: &RunConfig,
    previous: Option<&[GpModel]>,
    refit: bool,
) -> Result<Vec<GpModel>> {
    let m = objectives[0].len();
    let mut models = Vec::with_capacity(m);
    for j in 0..m {
        let ys: Vec<f64> = objectives.iter().map(|y| y[j]).collect();
        let model = match (refit, previous) {
            (false, Some(prev)) => {
                // Recondition on the new data at the previous hyperparameters;
                // the variance is re-profiled through a unit-variance kernel.
                let k = Kernel::new(cfg.kernel, prev[j].kernel.lengthscales.clone(), 1.0);
                GpModel::refit_variance(inputs, &ys, k)?
            }
            _ => GpModel::fit_with_starts(inputs, &ys, cfg.kernel, 10, cfg.seed ^ j as u64)?,
        };
        models.push(model);
    }
    Ok(models)
}

/// Pull a dominated center estimate back toward the Ideal until it is no
/// longer weakly dominated by an observed point, in small steps relative to
/// the Ideal-Nadir scale.
fn repair_target(center: &[f64], ideal: &[f64], nadir: &[f64], front: &[Vec<f64>]) -> Vec<f64> {
    let m = center.len();
    let scale: f64 = ideal
        .iter()
        .zip(nadir)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt();
    let dir: Vec<f64> = (0..m).map(|j| ideal[j] - center[j]).collect();
    let dnorm: f64 = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    if dnorm < 1e-15 {
        return center.to_vec();
    }
    let step = 1e-3 * scale / dnorm;
    let mut t = center.to_vec();
    let mut k = 0usize;
    while front.iter().any(|p| weakly_dominates(p, &t)) && k < 2000 {
        for j in 0..m {
            t[j] += step * dir[j];
        }
        k += 1;
    }
    t
}

struct LoopState {
    inputs: Vec<Vec<f64>>,
    objectives: Vec<Vec<f64>>,
    rows: Vec<IterRow>,
}

impl LoopState {
    fn init(problem: &Problem, cfg: &RunConfig) -> Result<LoopState> {
        let inputs = maximin_lhs(cfg.n_init, problem.dim, cfg.seed);
        let mut objectives = Vec::with_capacity(cfg.n_init);
        let mut rows = Vec::with_capacity(cfg.budget);
        for (i, x) in inputs.iter().enumerate() {
            let y = problem.eval(x)?;
            rows.push(IterRow {
                eval: i + 1,
                phase: Phase::Init,
                x: x.clone(),
                y: y.clone(),
                target: None,
                ideal: None,
                nadir: None,
                line_uncertainty: None,
                acq_value: None,
                acq_flat: false,
            });
            objectives.push(y);
        }
        Ok(LoopState {
            inputs,
            objectives,
            rows,
        })
    }

    fn push(&mut self, problem: &Problem, x: Vec<f64>, mut row: IterRow) -> Result<()> {
        let y = problem.eval(&x)?;
        row.eval = self.objectives.len() + 1;
        row.x = x.clone();
        row.y = y.clone();
        self.inputs.push(x);
        self.objectives.push(y);
        self.rows.push(row);
        Ok(())
    }

    fn finish(
        self,
        cfg: &RunConfig,
        est: Option<&CenterEstimate>,
        converged_at: Option<usize>,
        phase2_step: Option<usize>,
        phase2_fallback: bool,
    ) -> RunState {
        let front = non_dominated_set(&self.objectives);
        let (center, ideal, nadir) = match est {
            Some(e) => (e.center.clone(), e.ideal.clone(), e.nadir.clone()),
            None => {
                let s = summarize(&self.objectives);
                (s.center, s.ideal, s.nadir)
            }
        };
        RunState {
            config: cfg.clone(),
            inputs: self.inputs,
            objectives: self.objectives,
            rows: self.rows,
            converged_at,
            phase2_step,
            phase2_fallback,
            center,
            ideal,
            nadir,
            front,
        }
    }
}

fn blank_row(phase: Phase) -> IterRow {
    IterRow {
        eval: 0,
        phase,
        x: Vec::new(),
        y: Vec::new(),
        target: None,
        ideal: None,
        nadir: None,
        line_uncertainty: None,
        acq_value: None,
        acq_flat: false,
    }
}

/// Run the center-targeting optimizer on `problem` under `cfg`.
pub fn run(problem: &Problem, cfg: &RunConfig) -> Result<RunState> {
    cfg.validate()?;
    let mut st = LoopState::init(problem, cfg)?;
    let settings = EnsembleSettings {
        n_sim: cfg.n_sim,
        sim_points: cfg.sim_points,
        pool_size: cfg.pool_size,
    };

    let mut models: Option<Vec<GpModel>> = None;
    let mut last_est: Option<CenterEstimate> = None;
    let mut converged_at: Option<usize> = None;
    let mut phase2: Option<Phase2Plan> = None;

    while st.objectives.len() < cfg.budget {
        let n = st.objectives.len();
        let refit = models.is_none() || (n - cfg.n_init) % cfg.refit_period == 0;
        let fitted = fit_models(&st.inputs, &st.objectives, cfg, models.as_deref(), refit)?;

        let iter_seed = cfg
            .seed
            .wrapping_mul(0x2545_f491_4f6c_dd1d)
            .wrapping_add(n as u64);

        if converged_at.is_none() {
            // Phase 1: estimate the center, test convergence, step toward it.
            // The domination field uses its own ND-targeted ensemble; the
            // extreme-targeted one behind the center estimate under-samples
            // the middle of the front.
            let pass = ensemble_pass(&fitted, &st.objectives, &settings, iter_seed)?;
            let est = pass.center;
            let u = line_uncertainty(
                &pass.uncertainty_fronts,
                &est.ideal,
                &est.nadir,
                cfg.line_points,
            );
            if u < cfg.eps_line {
                converged_at = Some(n);
                last_est = Some(est);
                models = Some(fitted);
                continue;
            }
            let front = non_dominated_set(&st.objectives);
            let target = repair_target(&est.center, &est.ideal, &est.nadir, &front);
            let spec = AcquisitionSpec::Mei {
                target: target.clone(),
            };
            let acq = maximize(&fitted, &spec, cfg.acq_candidates, iter_seed ^ 0xacc);
            let mut row = blank_row(Phase::CenterSearch);
            row.target = Some(target);
            row.ideal = Some(est.ideal.clone());
            row.nadir = Some(est.nadir.clone());
            row.line_uncertainty = Some(u);
            row.acq_value = Some(acq.value);
            row.acq_flat = acq.flat;
            st.push(problem, acq.x, row)?;
            last_est = Some(est);
            models = Some(fitted);
        } else {
            // Phase 2: decide the region once, then aim at its corner.
            let est = last_est.as_ref().expect("converged without estimate");
            if phase2.is_none() {
                let remaining = cfg.budget - n;
                let front = non_dominated_set(&st.objectives);
                phase2 = Some(select_ref(
                    &fitted,
                    &front,
                    &est.ideal,
                    &est.center,
                    &est.nadir,
                    remaining,
                    cfg,
                    iter_seed ^ 0x9,
                )?);
            }
            let plan = phase2.as_ref().unwrap();
            // Widening uses the hypervolume criterion: mEI would pile
            // evaluations onto the single product-optimal point instead of
            // covering the region up to the reference.
            let spec = AcquisitionSpec::Ehi {
                front: non_dominated_set(&st.objectives),
                ref_point: plan.ref_point.clone(),
                mc_samples: cfg.ehi_mc_samples,
            };
            let acq = maximize(&fitted, &spec, cfg.acq_candidates, iter_seed ^ 0xacc);
            let mut row = blank_row(Phase::Widening);
            row.target = Some(plan.ref_point.clone());
            row.ideal = Some(est.ideal.clone());
            row.nadir = Some(est.nadir.clone());
            row.acq_value = Some(acq.value);
            row.acq_flat = acq.flat;
            st.push(problem, acq.x, row)?;
            models = Some(fitted);
        }
    }

    // Final center estimate from the complete data set. A one-off larger
    // candidate pool pays for itself here: front extremities sit in thin
    // slivers of the input space that the per-iteration pool rarely hits.
    let fitted = fit_models(&st.inputs, &st.objectives, cfg, models.as_deref(), true)?;
    let final_settings = EnsembleSettings {
        pool_size: cfg.final_pool_size.max(cfg.pool_size),
        ..settings
    };
    let final_est = estimate_center(
        &fitted,
        &st.objectives,
        &final_settings,
        cfg.seed.wrapping_mul(0x2545_f491_4f6c_dd1d).wrapping_add(cfg.budget as u64),
    )?;
    Ok(st.finish(
        cfg,
        Some(&final_est),
        converged_at,
        phase2.as_ref().map(|p| p.step),
        phase2.as_ref().map(|p| p.fallback).unwrap_or(false),
    ))
}

/// Like `run`, but aiming at the point of the front closest to the polyline
/// Ideal -> `preference` -> Nadir instead of the straight Ideal-Nadir line.
pub fn run_preference(
    problem: &Problem,
    cfg: &RunConfig,
    preference: &[f64],
) -> Result<RunState> {
    cfg.validate()?;
    let mut st = LoopState::init(problem, cfg)?;
    let settings = EnsembleSettings {
        n_sim: cfg.n_sim,
        sim_points: cfg.sim_points,
        pool_size: cfg.pool_size,
    };
    let mut models: Option<Vec<GpModel>> = None;
    let mut last_est: Option<CenterEstimate> = None;

    while st.objectives.len() < cfg.budget {
        let n = st.objectives.len();
        let refit = models.is_none() || (n - cfg.n_init) % cfg.refit_period == 0;
        let fitted = fit_models(&st.inputs, &st.objectives, cfg, models.as_deref(), refit)?;
        let iter_seed = cfg
            .seed
            .wrapping_mul(0x2545_f491_4f6c_dd1d)
            .wrapping_add(n as u64);
        let est = estimate_center(&fitted, &st.objectives, &settings, iter_seed)?;

        // Closest point of the simulated fronts to the two-segment polyline,
        // projected onto it; aggregated by the same median rule as the
        // center, using the draw-wise best projections.
        let target = polyline_target(&est, preference);
        let front = non_dominated_set(&st.objectives);
        let target = repair_target(&target, &est.ideal, &est.nadir, &front);
        let spec = AcquisitionSpec::Mei {
            target: target.clone(),
        };
        let acq = maximize(&fitted, &spec, cfg.acq_candidates, iter_seed ^ 0xacc);
        let mut row = blank_row(Phase::CenterSearch);
        row.target = Some(target);
        row.ideal = Some(est.ideal.clone());
        row.nadir = Some(est.nadir.clone());
        row.acq_value = Some(acq.value);
        row.acq_flat = acq.flat;
        st.push(problem, acq.x, row)?;
        last_est = Some(est);
        models = Some(fitted);
    }
    Ok(st.finish(cfg, last_est.as_ref(), None, None, false))
}

fn polyline_target(est: &CenterEstimate, preference: &[f64]) -> Vec<f64> {
    let m = preference.len();
    let segments = [
        (est.ideal.clone(), preference.to_vec()),
        (preference.to_vec(), est.nadir.clone()),
    ];
    let mut best: Option<(f64, Vec<f64>)> = None;
    for front in &est.fronts {
        for p in front {
            for (a, b) in &segments {
                let (d2, t) = line_distance2(p, a, b);
                let t = t.clamp(0.0, 1.0);
                let proj: Vec<f64> = (0..m).map(|j| a[j] + t * (b[j] - a[j])).collect();
                let d2c: f64 = p
                    .iter()
                    .zip(&proj)
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum::<f64>()
                    .max(d2);
                if best.as_ref().map_or(true, |(bd, _)| d2c < *bd) {
                    best = Some((d2c, proj));
                }
            }
        }
    }
    best.map(|(_, p)| p).unwrap_or_else(|| preference.to_vec())
}

/// Plain EHI optimizer used as a comparison baseline: fixed acquisition
/// toward a conservative reference point derived from the empirical front.
pub fn run_ehi_baseline(problem: &Problem, cfg: &RunConfig) -> Result<RunState> {
    cfg.validate()?;
    let mut st = LoopState::init(problem, cfg)?;
    let mut models: Option<Vec<GpModel>> = None;

    while st.objectives.len() < cfg.budget {
        let n = st.objectives.len();
        let refit = models.is_none() || (n - cfg.n_init) % cfg.refit_period == 0;
        let fitted = fit_models(&st.inputs, &st.objectives, cfg, models.as_deref(), refit)?;
        let iter_seed = cfg
            .seed
            .wrapping_mul(0x2545_f491_4f6c_dd1d)
            .wrapping_add(n as u64);

        let s = summarize(&st.objectives);
        // Slightly beyond the empirical Nadir so extreme points keep
        // positive improvement.
        let r = 1.1;
        let ref_point: Vec<f64> = s
            .ideal
            .iter()
            .zip(&s.nadir)
            .map(|(i, n)| (1.0 - r) * i + r * n)
            .collect();
        let spec = AcquisitionSpec::Ehi {
            front: s.front.clone(),
            ref_point: ref_point.clone(),
            mc_samples: cfg.ehi_mc_samples,
        };
        let acq = maximize(&fitted, &spec, cfg.acq_candidates, iter_seed ^ 0xacc);
        let mut row = blank_row(Phase::EhiBaseline);
        row.target = Some(ref_point);
        row.ideal = Some(s.ideal.clone());
        row.nadir = Some(s.nadir.clone());
        row.acq_value = Some(acq.value);
        row.acq_flat = acq.flat;
        st.push(problem, acq.x, row)?;
        models = Some(fitted);
    }
    Ok(st.finish(cfg, None, None, None, false))
}
