//! Run persistence and benchmark metrics: per-evaluation CSV logs, JSON run
//! summaries, region-of-interest metrics against a reference front, and
//! aggregation across repeated runs.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::driver::RunState;
use crate::error::{CehiError, Result};
use crate::pareto::{epsilon_indicator, hypervolume, igd, summarize, weakly_dominates};

/// Metrics for one region of interest I_w around the true center.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionMetric {
    pub w: f64,
    /// First evaluation (1-based) that entered the region, if any.
    pub attained_at: Option<usize>,
    /// Hypervolume of the evaluated points w.r.t. the region corner, in
    /// coordinates normalized by the reference Ideal-Nadir ranges.
    pub restricted_hv: f64,
    /// `restricted_hv` divided by the reference front's own restricted
    /// hypervolume, so 1 is the best achievable.
    pub normalized_hv: f64,
}

/// All metrics of a single run against a reference front.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metrics {
    pub regions: Vec<RegionMetric>,
    /// IGD of the evaluated front to the reference front, normalized space.
    pub igd: f64,
    /// Epsilon indicator of the evaluated front, normalized space.
    pub epsilon: f64,
    /// Max-norm error of the estimated center, when the truth is known.
    pub center_error_inf: Option<f64>,
}

pub const DEFAULT_REGION_WIDTHS: [f64; 6] = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3];

/// Compute region metrics of a run against a discretized reference front.
/// The region I_w is the box dominated w.r.t. R^w = C + w (N - C) built
/// from the reference front's Ideal, Nadir and center.
pub fn evaluate_metrics(
    state: &RunState,
    reference_front: &[Vec<f64>],
    true_center: Option<&[f64]>,
    widths: &[f64],
) -> Metrics {
    let s = summarize(reference_front);
    let m = s.ideal.len();
    let range: Vec<f64> = (0..m)
        .map(|j| (s.nadir[j] - s.ideal[j]).max(1e-12))
        .collect();
    let norm = |y: &[f64]| -> Vec<f64> {
        (0..m).map(|j| (y[j] - s.ideal[j]) / range[j]).collect()
    };
    let ref_norm: Vec<Vec<f64>> = reference_front.iter().map(|p| norm(p)).collect();
    let evals_norm: Vec<Vec<f64>> = state.objectives.iter().map(|p| norm(p)).collect();
    let front_norm: Vec<Vec<f64>> = state.front.iter().map(|p| norm(p)).collect();

    let center = true_center.map(|c| c.to_vec()).unwrap_or(s.center.clone());
    let mut regions = Vec::with_capacity(widths.len());
    for &w in widths {
        let corner: Vec<f64> = (0..m)
            .map(|j| center[j] + w * (s.nadir[j] - center[j]))
            .collect();
        let attained_at = state
            .objectives
            .iter()
            .position(|y| weakly_dominates(y, &corner))
            .map(|i| i + 1);
        let corner_norm = norm(&corner);
        let restricted_hv = hypervolume(&evals_norm, &corner_norm);
        let best_hv = hypervolume(&ref_norm, &corner_norm);
        let normalized_hv = if best_hv > 0.0 {
            restricted_hv / best_hv
        } else {
            0.0
        };
        regions.push(RegionMetric {
            w,
            attained_at,
            restricted_hv,
            normalized_hv,
        });
    }

    let center_error_inf = true_center.map(|c| {
        state
            .center
            .iter()
            .zip(c)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max)
    });

    Metrics {
        regions,
        igd: igd(&front_norm, &ref_norm),
        epsilon: epsilon_indicator(&front_norm, &ref_norm),
        center_error_inf,
    }
}

/// JSON-serializable summary of a finished run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub problem: String,
    pub seed: u64,
    pub budget: usize,
    pub converged_at: Option<usize>,
    pub phase2_step: Option<usize>,
    pub phase2_fallback: bool,
    pub center: Vec<f64>,
    pub ideal: Vec<f64>,
    pub nadir: Vec<f64>,
    pub front: Vec<Vec<f64>>,
    pub metrics: Option<Metrics>,
}

pub fn summarize_run(state: &RunState, metrics: Option<Metrics>) -> RunSummary {
    RunSummary {
        problem: state.config.problem.clone(),
        seed: state.config.seed,
        budget: state.config.budget,
        converged_at: state.converged_at,
        phase2_step: state.phase2_step,
        phase2_fallback: state.phase2_fallback,
        center: state.center.clone(),
        ideal: state.ideal.clone(),
        nadir: state.nadir.clone(),
        front: state.front.clone(),
        metrics,
    }
}

/// Per-evaluation CSV log. Columns are stable across runs of the same
/// problem shape, and the writer is deterministic byte-for-byte.
pub fn write_csv<W: Write>(state: &RunState, out: W) -> Result<()> {
    let d = state.inputs[0].len();
    let m = state.objectives[0].len();
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["eval".to_string(), "phase".to_string()];
    header.extend((0..d).map(|i| format!("x{i}")));
    header.extend((0..m).map(|j| format!("y{j}")));
    header.extend((0..m).map(|j| format!("target{j}")));
    header.extend((0..m).map(|j| format!("ideal{j}")));
    header.extend((0..m).map(|j| format!("nadir{j}")));
    header.push("line_uncertainty".into());
    header.push("acq_value".into());
    header.push("acq_flat".into());
    wtr.write_record(&header)?;

    let fmt = |v: f64| format!("{v:.17e}");
    let opt_vec = |v: &Option<Vec<f64>>, j: usize| -> String {
        v.as_ref().map(|v| fmt(v[j])).unwrap_or_default()
    };
    for row in &state.rows {
        let mut rec = vec![row.eval.to_string()];
        rec.push(
            serde_json::to_string(&row.phase)
                .unwrap()
                .trim_matches('"')
                .to_string(),
        );
        rec.extend(row.x.iter().map(|&v| fmt(v)));
        rec.extend(row.y.iter().map(|&v| fmt(v)));
        for j in 0..m {
            rec.push(opt_vec(&row.target, j));
        }
        for j in 0..m {
            rec.push(opt_vec(&row.ideal, j));
        }
        for j in 0..m {
            rec.push(opt_vec(&row.nadir, j));
        }
        rec.push(row.line_uncertainty.map(fmt).unwrap_or_default());
        rec.push(row.acq_value.map(fmt).unwrap_or_default());
        rec.push(row.acq_flat.to_string());
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_run(state: &RunState, dir: &Path, metrics: Option<Metrics>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let stem = format!("{}_seed{}", state.config.problem, state.config.seed);
    let csv_path = dir.join(format!("{stem}.csv"));
    write_csv(state, std::fs::File::create(csv_path)?)?;
    let summary = summarize_run(state, metrics);
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CehiError::Config(e.to_string()))?;
    std::fs::write(dir.join(format!("{stem}.json")), json + "\n")?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    let s = std::fs::read_to_string(path)?;
    serde_json::from_str(&s).map_err(|e| CehiError::Config(e.to_string()))
}

/// Aggregate of one region across runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionReport {
    pub w: f64,
    pub success_rate: f64,
    /// Mean and sd of the attainment time among successful runs.
    pub attainment_mean: Option<f64>,
    pub attainment_sd: Option<f64>,
    /// Expected running time: total evaluations spent (failures count their
    /// full budget) divided by the number of successes.
    pub ert: Option<f64>,
    pub hv_mean: f64,
    pub hv_sd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub n_runs: usize,
    pub regions: Vec<RegionReport>,
    pub igd_mean: f64,
    pub epsilon_mean: f64,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn aggregate(summaries: &[RunSummary]) -> Result<Report> {
    if summaries.is_empty() {
        return Err(CehiError::InvalidInput("no summaries to aggregate".into()));
    }
    let with_metrics: Vec<&RunSummary> =
        summaries.iter().filter(|s| s.metrics.is_some()).collect();
    if with_metrics.is_empty() {
        return Err(CehiError::InvalidInput(
            "summaries carry no metrics".into(),
        ));
    }
    let n_regions = with_metrics[0].metrics.as_ref().unwrap().regions.len();
    let mut regions = Vec::with_capacity(n_regions);
    for k in 0..n_regions {
        let w = with_metrics[0].metrics.as_ref().unwrap().regions[k].w;
        let mut attained = Vec::new();
        let mut spent = 0.0;
        let mut hvs = Vec::new();
        for s in &with_metrics {
            let r = &s.metrics.as_ref().unwrap().regions[k];
            assert!((r.w - w).abs() < 1e-12, "mismatched region widths");
            match r.attained_at {
                Some(t) => {
                    attained.push(t as f64);
                    spent += t as f64;
                }
                None => spent += s.budget as f64,
            }
            hvs.push(r.normalized_hv);
        }
        let (hv_mean, hv_sd) = mean_sd(&hvs);
        let success_rate = attained.len() as f64 / with_metrics.len() as f64;
        let (attainment_mean, attainment_sd, ert) = if attained.is_empty() {
            (None, None, None)
        } else {
            let (m, s) = mean_sd(&attained);
            (Some(m), Some(s), Some(spent / attained.len() as f64))
        };
        regions.push(RegionReport {
            w,
            success_rate,
            attainment_mean,
            attainment_sd,
            ert,
            hv_mean,
            hv_sd,
        });
    }
    let igds: Vec<f64> = with_metrics
        .iter()
        .map(|s| s.metrics.as_ref().unwrap().igd)
        .collect();
    let eps: Vec<f64> = with_metrics
        .iter()
        .map(|s| s.metrics.as_ref().unwrap().epsilon)
        .collect();
    Ok(Report {
        n_runs: with_metrics.len(),
        regions,
        igd_mean: mean_sd(&igds).0,
        epsilon_mean: mean_sd(&eps).0,
    })
}

/// Reference-front CSV (one objective vector per row), used by the CLI.
pub fn write_front_csv<W: Write>(front: &[Vec<f64>], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let m = front[0].len();
    wtr.write_record((0..m).map(|j| format!("f{j}")))?;
    for p in front {
        wtr.write_record(p.iter().map(|v| format!("{v:.17e}")))?;
    }
    wtr.flush()?;
    Ok(())
}
