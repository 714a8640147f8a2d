//! Run configuration with TOML loading; every field has a default so a
//! config file only needs to state what it overrides.

use serde::{Deserialize, Serialize};

use crate::error::{CehiError, Result};
use crate::kernel::KernelFamily;

fn d_problem() -> String {
    "zdt1".into()
}
fn d_dim() -> usize {
    4
}
fn d_budget() -> usize {
    60
}
fn d_n_init() -> usize {
    20
}
fn d_seed() -> u64 {
    0
}
fn d_kernel() -> KernelFamily {
    KernelFamily::Matern52
}
fn d_n_sim() -> usize {
    200
}
fn d_sim_points() -> usize {
    1000
}
fn d_pool_size() -> usize {
    1 << 14
}
fn d_final_pool_size() -> usize {
    1 << 17
}
fn d_eps_line() -> f64 {
    1e-4
}
fn d_eps_volume() -> f64 {
    1e-3
}
fn d_line_points() -> usize {
    100
}
fn d_volume_samples() -> usize {
    100_000
}
fn d_acq_candidates() -> usize {
    2000
}
fn d_ehi_mc_samples() -> usize {
    1000
}
fn d_ref_steps() -> usize {
    10
}
fn d_rollout_sim_points() -> usize {
    500
}
fn d_rollout_volume_samples() -> usize {
    10_000
}
fn d_refit_period() -> usize {
    1
}

/// Everything a run needs besides the objective function itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Benchmark problem name (see `problems::by_name`).
    pub problem: String,
    /// Input dimension.
    pub dim: usize,
    /// Total evaluation budget, including the initial design.
    pub budget: usize,
    /// Initial space-filling design size.
    pub n_init: usize,
    pub seed: u64,
    pub kernel: KernelFamily,
    /// Number of joint conditional simulations per Ideal/Nadir estimate.
    pub n_sim: usize,
    /// Simulation points per draw (importance-sampled from the pool).
    pub sim_points: usize,
    /// Size of the Halton candidate pool the simulation points come from.
    pub pool_size: usize,
    /// Larger pool used once for the end-of-run center estimate: extreme
    /// front regions occupy a tiny volume of the input space, so the final
    /// Ideal/Nadir read-out benefits from far more candidates than the
    /// per-iteration passes can afford.
    pub final_pool_size: usize,
    /// Convergence threshold on the mean domination uncertainty along the
    /// Ideal-Nadir line.
    pub eps_line: f64,
    /// Threshold on the mean domination uncertainty over a region.
    pub eps_volume: f64,
    /// Discretization of the Ideal-Nadir line for the uncertainty integral.
    pub line_points: usize,
    /// Monte-Carlo samples for the volume uncertainty.
    pub volume_samples: usize,
    /// Candidate pool size for acquisition maximization.
    pub acq_candidates: usize,
    /// Monte-Carlo samples for EHI with three or more objectives.
    pub ehi_mc_samples: usize,
    /// Number of steps on the center-to-Nadir segment tried when widening
    /// the target region for the remaining budget.
    pub ref_steps: usize,
    /// Cheaper simulation size used inside Kriging-Believer rollouts.
    pub rollout_sim_points: usize,
    /// Cheaper volume-uncertainty sample count used inside rollouts.
    pub rollout_volume_samples: usize,
    /// Re-estimate kernel hyperparameters every this many evaluations.
    pub refit_period: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: d_problem(),
            dim: d_dim(),
            budget: d_budget(),
            n_init: d_n_init(),
            seed: d_seed(),
            kernel: d_kernel(),
            n_sim: d_n_sim(),
            sim_points: d_sim_points(),
            pool_size: d_pool_size(),
            final_pool_size: d_final_pool_size(),
            eps_line: d_eps_line(),
            eps_volume: d_eps_volume(),
            line_points: d_line_points(),
            volume_samples: d_volume_samples(),
            acq_candidates: d_acq_candidates(),
            ehi_mc_samples: d_ehi_mc_samples(),
            ref_steps: d_ref_steps(),
            rollout_sim_points: d_rollout_sim_points(),
            rollout_volume_samples: d_rollout_volume_samples(),
            refit_period: d_refit_period(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(s).map_err(|e| CehiError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Self::from_toml_str(&s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(CehiError::Config("dim must be positive".into()));
        }
        if self.n_init < 2 {
            return Err(CehiError::Config("n_init must be at least 2".into()));
        }
        if self.budget < self.n_init {
            return Err(CehiError::Config(format!(
                "budget {} smaller than initial design {}",
                self.budget, self.n_init
            )));
        }
        if self.sim_points > self.pool_size || self.sim_points > self.final_pool_size {
            return Err(CehiError::Config(
                "sim_points cannot exceed pool_size".into(),
            ));
        }
        if !(self.eps_line > 0.0 && self.eps_volume > 0.0) {
            return Err(CehiError::Config("thresholds must be positive".into()));
        }
        if self.line_points < 2 || self.n_sim == 0 || self.ref_steps == 0 {
            return Err(CehiError::Config("degenerate sampling sizes".into()));
        }
        if self.refit_period == 0 {
            return Err(CehiError::Config("refit_period must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_gives_defaults() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg.budget, 60);
        assert_eq!(cfg.n_sim, 200);
        assert_eq!(cfg.pool_size, 1 << 14);
        assert_eq!(cfg.eps_line, 1e-4);
        assert_eq!(cfg.eps_volume, 1e-3);
    }

    #[test]
    fn partial_toml_overrides_only_named_fields() {
        let cfg = RunConfig::from_toml_str("budget = 80\nseed = 7\n").unwrap();
        assert_eq!(cfg.budget, 80);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.n_init, 20);
    }

    #[test]
    fn unknown_field_is_rejected() {
        assert!(RunConfig::from_toml_str("bogus = 1\n").is_err());
    }

    #[test]
    fn invalid_budget_is_rejected() {
        assert!(RunConfig::from_toml_str("budget = 5\nn_init = 20\n").is_err());
    }

    #[test]
    fn kernel_name_parses() {
        let cfg = RunConfig::from_toml_str("kernel = \"squared_exponential\"\n").unwrap();
        assert_eq!(cfg.kernel, KernelFamily::SquaredExponential);
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = RunConfig::default();
        let s = toml::to_string(&cfg).unwrap();
        let back = RunConfig::from_toml_str(&s).unwrap();
        assert_eq!(toml::to_string(&back).unwrap(), s);
    }
}
