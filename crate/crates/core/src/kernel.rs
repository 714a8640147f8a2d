//! Stationary covariance kernels on the unit cube.

use serde::{Deserialize, Serialize};

const SQRT5: f64 = 2.236_067_977_499_79;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Matern52,
    SquaredExponential,
}

/// Anisotropic stationary kernel with one lengthscale per input dimension.
///
/// Correlations are computed from the scaled Euclidean distance
/// `a = sqrt(sum_l ((x_l - x'_l) / theta_l)^2)`; `variance` is the process
/// variance multiplying the correlation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Kernel {
    pub family: KernelFamily,
    pub lengthscales: Vec<f64>,
    pub variance: f64,
}

impl Kernel {
    pub fn new(family: KernelFamily, lengthscales: Vec<f64>, variance: f64) -> Self {
        assert!(
            lengthscales.iter().all(|&t| t > 0.0) && variance > 0.0,
            "lengthscales and variance must be strictly positive"
        );
        Kernel {
            family,
            lengthscales,
            variance,
        }
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    fn scaled_dist(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for l in 0..self.lengthscales.len() {
            let h = (x[l] - y[l]) / self.lengthscales[l];
            s += h * h;
        }
        s.sqrt()
    }

    fn corr_of_dist(&self, a: f64) -> f64 {
        match self.family {
            KernelFamily::Matern52 => {
                (1.0 + SQRT5 * a + 5.0 / 3.0 * a * a) * (-SQRT5 * a).exp()
            }
            KernelFamily::SquaredExponential => (-0.5 * a * a).exp(),
        }
    }

    /// Correlation (kernel without the variance factor) between two points.
    pub fn corr(&self, x: &[f64], y: &[f64]) -> f64 {
        self.corr_of_dist(self.scaled_dist(x, y))
    }

    /// Covariance between two points.
    pub fn cov(&self, x: &[f64], y: &[f64]) -> f64 {
        self.variance * self.corr(x, y)
    }

    /// Gradient of `corr(x, y)` with respect to `x`.
    pub fn corr_grad(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let d = self.lengthscales.len();
        let a = self.scaled_dist(x, y);
        let mut g = vec![0.0; d];
        if a < 1e-300 {
            return g;
        }
        // d corr / d a
        let dka = match self.family {
            KernelFamily::Matern52 => {
                -(5.0 / 3.0) * a * (1.0 + SQRT5 * a) * (-SQRT5 * a).exp()
            }
            KernelFamily::SquaredExponential => -a * (-0.5 * a * a).exp(),
        };
        for l in 0..d {
            let tl = self.lengthscales[l];
            g[l] = dka * (x[l] - y[l]) / (tl * tl * a);
        }
        g
    }
}
