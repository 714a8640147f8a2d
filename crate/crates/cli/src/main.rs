//! Command-line front end: run experiments from a config file, aggregate
//! reports over repeated runs, and expose one-shot center estimation and
//! front simulation on observation CSVs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use cehi_core::config::RunConfig;
use cehi_core::driver::run;
use cehi_core::ensemble::{estimate_center, CenterEstimate, EnsembleSettings};
use cehi_core::gp::GpModel;
use cehi_core::problems;
use cehi_core::record::{
    aggregate, evaluate_metrics, read_summary, write_run, Metrics, DEFAULT_REGION_WIDTHS,
};

#[derive(Parser)]
#[command(
    name = "cehi",
    version,
    about = "Bayesian multi-objective optimizer targeting the Pareto front center"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute an experiment (optionally repeated) and write per-run logs
    /// and summaries.
    Run(RunArgs),
    /// Aggregate metrics across the run summaries in an output directory.
    Report(ReportArgs),
    /// One-shot center estimation from an observations CSV.
    Center(CenterArgs),
    /// Emit simulated Pareto fronts from an observations CSV, as CSV rows
    /// ready for external plotting.
    Fronts(FrontsArgs),
}

#[derive(Args)]
struct ConfigOverrides {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base random seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Benchmark problem name (overrides the config).
    #[arg(long)]
    problem: Option<String>,
    /// Total evaluation budget (overrides the config).
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    overrides: ConfigOverrides,
    /// Output directory for logs and summaries.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Number of independent repeats; repeat r uses seed + r.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding the run summaries written by `run`.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Args)]
struct CenterArgs {
    #[command(flatten)]
    overrides: ConfigOverrides,
    /// Observations CSV with x... input columns and y... objective columns.
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct FrontsArgs {
    #[command(flatten)]
    overrides: ConfigOverrides,
    /// Observations CSV with x... input columns and y... objective columns.
    #[arg(long)]
    data: PathBuf,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    if let Ok(v) = std::env::var("CEHI_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Report(a) => cmd_report(a),
        Cmd::Center(a) => cmd_center(a),
        Cmd::Fronts(a) => cmd_fronts(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn load_config(o: &ConfigOverrides) -> Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(p) => RunConfig::from_path(p).with_context(|| format!("loading {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(p) = &o.problem {
        cfg.problem = p.clone();
    }
    if let Some(b) = o.budget {
        cfg.budget = b;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let cfg = load_config(&a.overrides)?;
    let problem = problems::by_name(&cfg.problem, cfg.dim)?;
    let reference = problem.reference_front(2001);
    let seeds: Vec<u64> = (0..a.repeats.max(1)).map(|r| cfg.seed + r as u64).collect();

    let states = seeds
        .par_iter()
        .map(|&s| {
            let mut c = cfg.clone();
            c.seed = s;
            run(&problem, &c)
        })
        .collect::<Vec<_>>();

    for st in states {
        let st = st?;
        let metrics: Option<Metrics> = reference.as_ref().map(|front| {
            evaluate_metrics(
                &st,
                front,
                problem.true_center.as_deref(),
                &DEFAULT_REGION_WIDTHS,
            )
        });
        println!(
            "seed {}: {} evaluations, center {}, converged at {}",
            st.config.seed,
            st.objectives.len(),
            fmt_vec(&st.center),
            st.converged_at
                .map_or("-".into(), |n| n.to_string()),
        );
        write_run(&st, &a.out, metrics)?;
    }
    println!("wrote {} run(s) to {}", seeds.len(), a.out.display());
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let mut summaries = Vec::new();
    for entry in std::fs::read_dir(&a.out)
        .with_context(|| format!("reading {}", a.out.display()))?
    {
        let path = entry?.path();
        let is_summary = path.extension().is_some_and(|e| e == "json")
            && path.file_name().is_some_and(|n| n != "report.json");
        if is_summary {
            summaries.push(read_summary(&path)?);
        }
    }
    if summaries.is_empty() {
        bail!("no run summaries in {}", a.out.display());
    }
    summaries.sort_by_key(|s| s.seed);
    let report = aggregate(&summaries)?;

    println!("{} run(s)", report.n_runs);
    println!("  w     success  attain(mean)  ERT      hv(mean)  hv(sd)");
    for r in &report.regions {
        println!(
            "  {:<5} {:>6.0}%  {:>12}  {:>7}  {:>8.3}  {:>6.3}",
            r.w,
            100.0 * r.success_rate,
            r.attainment_mean.map_or("-".into(), |v| format!("{v:.1}")),
            r.ert.map_or("-".into(), |v| format!("{v:.1}")),
            r.hv_mean,
            r.hv_sd,
        );
    }
    println!("  IGD mean {:.4}  epsilon mean {:.4}", report.igd_mean, report.epsilon_mean);

    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(a.out.join("report.json"), json + "\n")?;
    let mut wtr = csv::Writer::from_path(a.out.join("report.csv"))?;
    wtr.write_record(["w", "success_rate", "attainment_mean", "ert", "hv_mean", "hv_sd"])?;
    for r in &report.regions {
        wtr.write_record([
            r.w.to_string(),
            r.success_rate.to_string(),
            r.attainment_mean.map_or(String::new(), |v| v.to_string()),
            r.ert.map_or(String::new(), |v| v.to_string()),
            r.hv_mean.to_string(),
            r.hv_sd.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

fn cmd_center(a: CenterArgs) -> Result<()> {
    let cfg = load_config(&a.overrides)?;
    let (est, _) = estimate_from_csv(&a.data, &cfg)?;
    let out = serde_json::json!({
        "center": est.center,
        "ideal": est.ideal,
        "nadir": est.nadir,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn cmd_fronts(a: FrontsArgs) -> Result<()> {
    let cfg = load_config(&a.overrides)?;
    let (est, m) = estimate_from_csv(&a.data, &cfg)?;
    let sink: Box<dyn std::io::Write> = match &a.out {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut wtr = csv::Writer::from_writer(sink);
    let mut header = vec!["draw".to_string()];
    header.extend((0..m).map(|j| format!("f{j}")));
    wtr.write_record(&header)?;
    for (k, front) in est.fronts.iter().enumerate() {
        for p in front {
            let mut rec = vec![k.to_string()];
            rec.extend(p.iter().map(|v| format!("{v:.17e}")));
            wtr.write_record(&rec)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Fit one GP per objective on the observations and run the simulation
/// ensemble once; returns the estimate and the number of objectives.
fn estimate_from_csv(path: &Path, cfg: &RunConfig) -> Result<(CenterEstimate, usize)> {
    let (inputs, objectives) = read_observations(path)?;
    let m = objectives[0].len();
    let mut models = Vec::with_capacity(m);
    for j in 0..m {
        let col: Vec<f64> = objectives.iter().map(|y| y[j]).collect();
        models.push(GpModel::fit_with_starts(
            &inputs,
            &col,
            cfg.kernel,
            10,
            cfg.seed ^ j as u64,
        )?);
    }
    let settings = EnsembleSettings {
        n_sim: cfg.n_sim,
        sim_points: cfg.sim_points,
        pool_size: cfg.pool_size,
    };
    let est = estimate_center(&models, &objectives, &settings, cfg.seed)?;
    Ok((est, m))
}

/// Observations CSV: a header row where input columns start with `x` and
/// objective columns start with `y`, in any order, one observation per row.
fn read_observations(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let mut rdr = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let x_cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with('x'))
        .map(|(i, _)| i)
        .collect();
    let y_cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with('y'))
        .map(|(i, _)| i)
        .collect();
    if x_cols.is_empty() || y_cols.is_empty() {
        bail!("expected x... and y... columns, found header {headers:?}");
    }
    let mut inputs = Vec::new();
    let mut objectives = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let parse = |i: usize| -> Result<f64> {
            record[i]
                .trim()
                .parse::<f64>()
                .with_context(|| format!("row {}, column {}", row + 2, &headers[i]))
        };
        inputs.push(x_cols.iter().map(|&i| parse(i)).collect::<Result<Vec<f64>>>()?);
        objectives.push(y_cols.iter().map(|&i| parse(i)).collect::<Result<Vec<f64>>>()?);
    }
    if inputs.len() < 2 {
        bail!("need at least two observations, got {}", inputs.len());
    }
    Ok((inputs, objectives))
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("({})", parts.join(", "))
}
