//! Budget-constrained Bayesian multi-objective optimization that targets the
//! center of the Pareto front.
//!
//! The optimizer models each objective with an independent Gaussian process,
//! estimates the Ideal and Nadir points (and from them the front center) via
//! conditional GP simulations, drives the search toward the center with the
//! multiplicative Expected Improvement criterion, detects local convergence
//! through a domination-uncertainty integral along the Ideal-Nadir line, and
//! then widens the targeted region to the largest area reachable with the
//! remaining evaluation budget using Kriging-Believer rollouts.

pub mod acquisition;
pub mod config;
pub mod doe;
pub mod driver;
pub mod ensemble;
pub mod error;
pub mod gp;
pub mod kernel;
pub(crate) mod opt;
pub mod pareto;
pub mod planner;
pub mod problems;
pub mod record;
pub mod uncertainty;

pub use config::RunConfig;
pub use driver::{run, run_ehi_baseline, run_preference, RunState};
pub use error::{CehiError, Result};
pub use gp::GpModel;
pub use kernel::{Kernel, KernelFamily};
pub use pareto::FrontSummary;
pub use problems::Problem;
