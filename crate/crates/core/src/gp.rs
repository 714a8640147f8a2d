//! Ordinary-kriging Gaussian process regression: hyperparameter estimation by
//! maximum likelihood, posterior prediction with the mean-estimation
//! correction term, and joint conditional simulation.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{CehiError, Result};
use crate::kernel::{Kernel, KernelFamily};
use crate::opt::nelder_mead;

const THETA_MIN: f64 = 1e-3;
const THETA_MAX: f64 = 10.0;
const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;
/// Default cap on joint-simulation batch size.
pub const SIM_POINT_CAP: usize = 5000;

/// Posterior summary at a batch of query points.
#[derive(Debug, Clone)]
pub struct Posterior {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// Joint posterior covariance, present when requested.
    pub cross_cov: Option<DMatrix<f64>>,
}

/// A Gaussian process conditioned on observations, with constant (estimated)
/// mean. Immutable after construction; cheap to clone for rollouts.
#[derive(Debug, Clone)]
pub struct GpModel {
    pub kernel: Kernel,
    pub mean: f64,
    /// Absolute nugget added to the covariance diagonal (jitter * variance).
    pub nugget: f64,
    pub train_inputs: Vec<Vec<f64>>,
    pub train_outputs: Vec<f64>,
    chol: Cholesky<f64, Dyn>,
    /// K^-1 (Y - 1 mu)
    alpha: DVector<f64>,
    /// K^-1 1
    kinv_one: DVector<f64>,
    /// 1^T K^-1 1
    one_kinv_one: f64,
    log_likelihood: f64,
}

fn validate(inputs: &[Vec<f64>], outputs: &[f64]) -> Result<usize> {
    if inputs.len() < 2 {
        return Err(CehiError::InvalidInput(format!(
            "need at least 2 observations, got {}",
            inputs.len()
        )));
    }
    if inputs.len() != outputs.len() {
        return Err(CehiError::InvalidInput(
            "inputs/outputs length mismatch".into(),
        ));
    }
    let d = inputs[0].len();
    for x in inputs {
        if x.len() != d {
            return Err(CehiError::InvalidInput("ragged input matrix".into()));
        }
        if x.iter().any(|v| !v.is_finite() || *v < -1e-9 || *v > 1.0 + 1e-9) {
            return Err(CehiError::InvalidInput(format!(
                "input outside [0,1]^d: {:?}",
                x
            )));
        }
    }
    if outputs.iter().any(|v| !v.is_finite()) {
        return Err(CehiError::InvalidInput("non-finite output".into()));
    }
    Ok(d)
}

/// Correlation matrix for unit-variance kernel.
fn corr_matrix(kernel: &Kernel, inputs: &[Vec<f64>]) -> DMatrix<f64> {
    let n = inputs.len();
    DMatrix::from_fn(n, n, |i, j| kernel.corr(&inputs[i], &inputs[j]))
}

/// Cholesky with adaptive diagonal jitter. Returns the factor and the jitter
/// actually used (relative to the matrix scale already present in `m`).
fn chol_with_jitter(m: &DMatrix<f64>, scale: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Ok((c, 0.0));
    }
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX * 1.0000001 {
        let mut mj = m.clone();
        for i in 0..m.nrows() {
            mj[(i, i)] += jitter * scale;
        }
        if let Some(c) = Cholesky::new(mj) {
            return Ok((c, jitter));
        }
        jitter *= 10.0;
    }
    Err(CehiError::Conditioning(format!(
        "covariance not factorizable at max jitter {JITTER_MAX:e}"
    )))
}

/// Concentrated log marginal likelihood of the lengthscales: the constant
/// mean and process variance are profiled out in closed form.
fn concentrated_ll(
    family: KernelFamily,
    lengthscales: &[f64],
    inputs: &[Vec<f64>],
    outputs: &[f64],
) -> f64 {
    let n = inputs.len();
    let kernel = Kernel::new(family, lengthscales.to_vec(), 1.0);
    let r = corr_matrix(&kernel, inputs);
    let (chol, _) = match chol_with_jitter(&r, 1.0) {
        Ok(c) => c,
        Err(_) => return f64::NEG_INFINITY,
    };
    let y = DVector::from_column_slice(outputs);
    let ones = DVector::from_element(n, 1.0);
    let rinv_y = chol.solve(&y);
    let rinv_one = chol.solve(&ones);
    let s = ones.dot(&rinv_one);
    let mu = ones.dot(&rinv_y) / s;
    let resid = &y - &ones * mu;
    let rinv_resid = chol.solve(&resid);
    let sigma2 = (resid.dot(&rinv_resid) / n as f64).max(1e-12);
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    -0.5 * (n as f64 * (2.0 * std::f64::consts::PI * sigma2).ln() + log_det + n as f64)
}

impl GpModel {
    /// Fit with hyperparameters maximizing the log marginal likelihood, using
    /// a multistart Nelder-Mead search on log-lengthscales.
    pub fn fit(inputs: &[Vec<f64>], outputs: &[f64], family: KernelFamily) -> Result<GpModel> {
        Self::fit_with_starts(inputs, outputs, family, 10, 0)
    }

    pub fn fit_with_starts(
        inputs: &[Vec<f64>],
        outputs: &[f64],
        family: KernelFamily,
        n_starts: usize,
        seed: u64,
    ) -> Result<GpModel> {
        let d = validate(inputs, outputs)?;
        let bounds: Vec<(f64, f64)> = vec![(THETA_MIN.ln(), THETA_MAX.ln()); d];
        let obj = |logt: &[f64]| {
            let t: Vec<f64> = logt.iter().map(|v| v.exp()).collect();
            -concentrated_ll(family, &t, inputs, outputs)
        };

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xce41_5ca1e);
        let mut best: Option<(Vec<f64>, f64)> = None;
        for start in 0..n_starts.max(1) {
            let x0: Vec<f64> = if start == 0 {
                vec![0.5f64.ln(); d]
            } else {
                (0..d)
                    .map(|_| rng.gen_range(THETA_MIN.ln()..THETA_MAX.ln()))
                    .collect()
            };
            let (x, v) = nelder_mead(&obj, &x0, 0.25, &bounds, 200);
            if best.as_ref().map_or(true, |(_, bv)| v < *bv) {
                best = Some((x, v));
            }
        }
        let (logt, _) = best.unwrap();
        let lengthscales: Vec<f64> = logt.iter().map(|v| v.exp()).collect();
        let kernel = Kernel::new(family, lengthscales, 1.0);
        Self::assemble(inputs, outputs, kernel, true)
    }

    /// Build a model with fixed kernel hyperparameters (no MLE). When
    /// `estimate_moments` the constant mean and variance are still profiled
    /// from the data; otherwise the kernel's variance is used as-is together
    /// with the generalized least squares mean.
    pub fn with_kernel(inputs: &[Vec<f64>], outputs: &[f64], kernel: Kernel) -> Result<GpModel> {
        validate(inputs, outputs)?;
        Self::assemble(inputs, outputs, kernel, false)
    }

    /// Recondition on new data at fixed lengthscales, re-profiling the
    /// constant mean and process variance from the data. Cheaper than a full
    /// hyperparameter search; used between periodic refits.
    pub fn refit_variance(inputs: &[Vec<f64>], outputs: &[f64], kernel: Kernel) -> Result<GpModel> {
        validate(inputs, outputs)?;
        Self::assemble(inputs, outputs, kernel, true)
    }

    fn assemble(
        inputs: &[Vec<f64>],
        outputs: &[f64],
        kernel: Kernel,
        estimate_variance: bool,
    ) -> Result<GpModel> {
        let n = inputs.len();
        let r = corr_matrix(&kernel, inputs);
        let (rchol, jitter) = chol_with_jitter(&r, 1.0)?;
        let y = DVector::from_column_slice(outputs);
        let ones = DVector::from_element(n, 1.0);
        let rinv_one = rchol.solve(&ones);
        let s_r = ones.dot(&rinv_one);
        let mu = ones.dot(&rchol.solve(&y)) / s_r;
        let resid = &y - &ones * mu;
        let rinv_resid = rchol.solve(&resid);

        let variance = if estimate_variance {
            (resid.dot(&rinv_resid) / n as f64).max(1e-10)
        } else {
            kernel.variance
        };
        let kernel = Kernel::new(kernel.family, kernel.lengthscales.clone(), variance);

        // Covariance-scale factor: K + nugget I = variance * (R + jitter I).
        // Rescaling can lose marginal positive definiteness, so this
        // factorization keeps its own adaptive jitter.
        let mut k = r * variance;
        let mut nugget = jitter * variance;
        for i in 0..n {
            k[(i, i)] += nugget;
        }
        let (chol, extra) = chol_with_jitter(&k, variance)?;
        nugget += extra * variance;
        let alpha = chol.solve(&resid);
        let kinv_one = chol.solve(&ones);
        let one_kinv_one = ones.dot(&kinv_one);

        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        let quad = resid.dot(&alpha);
        let log_likelihood =
            -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + quad);

        Ok(GpModel {
            kernel,
            mean: mu,
            nugget,
            train_inputs: inputs.to_vec(),
            train_outputs: outputs.to_vec(),
            chol,
            alpha,
            kinv_one,
            one_kinv_one,
            log_likelihood,
        })
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn n_train(&self) -> usize {
        self.train_inputs.len()
    }

    /// Log marginal likelihood at the fitted hyperparameters.
    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    fn cov_vector(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.n_train(), |i, _| {
            self.kernel.cov(x, &self.train_inputs[i])
        })
    }

    /// Posterior mean and standard deviation at a single point.
    pub fn predict_one(&self, x: &[f64]) -> (f64, f64) {
        let kx = self.cov_vector(x);
        let mean = self.mean + kx.dot(&self.alpha);
        let w = self.chol.solve(&kx);
        let g = 1.0 - self.kinv_one.dot(&kx);
        let var = self.kernel.variance - kx.dot(&w) + g * g / self.one_kinv_one;
        (mean, var.max(0.0).sqrt())
    }

    /// Posterior at a batch of points, optionally with the joint covariance
    /// (including the ordinary-kriging mean-estimation correction).
    pub fn predict(&self, query: &[Vec<f64>], want_cov: bool) -> Posterior {
        let s = query.len();
        let n = self.n_train();
        let mut kx = DMatrix::zeros(n, s);
        for (a, q) in query.iter().enumerate() {
            for i in 0..n {
                kx[(i, a)] = self.kernel.cov(q, &self.train_inputs[i]);
            }
        }
        let w = self.chol.solve(&kx); // K^-1 Kx, n x s
        let mut mean = vec![0.0; s];
        let mut sd = vec![0.0; s];
        let mut g = vec![0.0; s];
        for a in 0..s {
            let kxa = kx.column(a);
            mean[a] = self.mean + kxa.dot(&self.alpha);
            g[a] = 1.0 - self.kinv_one.dot(&kxa);
            let var =
                self.kernel.variance - kxa.dot(&w.column(a)) + g[a] * g[a] / self.one_kinv_one;
            sd[a] = var.max(0.0).sqrt();
        }
        let cross_cov = if want_cov {
            let mut gamma = DMatrix::zeros(s, s);
            for a in 0..s {
                for b in a..s {
                    let prior = self.kernel.cov(&query[a], &query[b]);
                    let v = prior - kx.column(a).dot(&w.column(b))
                        + g[a] * g[b] / self.one_kinv_one;
                    gamma[(a, b)] = v;
                    gamma[(b, a)] = v;
                }
            }
            Some(gamma)
        } else {
            None
        };
        Posterior {
            mean,
            sd,
            cross_cov,
        }
    }

    /// Posterior mean/sd and their gradients at an interior point.
    /// Returns (mean, sd, d mean/dx, d sd/dx).
    pub fn predict_grad(&self, x: &[f64]) -> (f64, f64, Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let n = self.n_train();
        let kx = self.cov_vector(x);
        let w = self.chol.solve(&kx);
        let mean = self.mean + kx.dot(&self.alpha);
        let g = 1.0 - self.kinv_one.dot(&kx);
        let var = (self.kernel.variance - kx.dot(&w) + g * g / self.one_kinv_one).max(0.0);
        let sd = var.sqrt();

        let mut dmean = vec![0.0; d];
        let mut dvar = vec![0.0; d];
        for i in 0..n {
            let gr = self.kernel.corr_grad(x, &self.train_inputs[i]);
            for l in 0..d {
                let dk = self.kernel.variance * gr[l];
                dmean[l] += self.alpha[i] * dk;
                dvar[l] += -2.0 * w[i] * dk
                    - 2.0 * g / self.one_kinv_one * self.kinv_one[i] * dk;
            }
        }
        let dsd: Vec<f64> = if sd > 1e-12 {
            dvar.iter().map(|v| v / (2.0 * sd)).collect()
        } else {
            vec![0.0; d]
        };
        (mean, sd, dmean, dsd)
    }

    /// Joint draws from the posterior at `query`; rows are independent
    /// simulations. Deterministic given `seed`.
    pub fn simulate(&self, query: &[Vec<f64>], n_sim: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let s = query.len();
        if s > SIM_POINT_CAP {
            return Err(CehiError::InvalidInput(format!(
                "simulation batch {s} exceeds cap {SIM_POINT_CAP}"
            )));
        }
        let post = self.predict(query, true);
        let gamma = post.cross_cov.unwrap();
        let (lchol, _) = chol_with_jitter(&gamma, self.kernel.variance)?;
        let l = lchol.l();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n_sim);
        for _ in 0..n_sim {
            let z = DVector::from_fn(s, |_, _| rng.sample::<f64, _>(StandardNormal));
            let corr = &l * z;
            out.push((0..s).map(|a| post.mean[a] + corr[a]).collect());
        }
        Ok(out)
    }

    /// Kriging-Believer augmentation: same kernel hyperparameters, one more
    /// (virtual) observation.
    pub fn augment(&self, x: &[f64], y: f64) -> Result<GpModel> {
        let mut inputs = self.train_inputs.clone();
        let mut outputs = self.train_outputs.clone();
        inputs.push(x.to_vec());
        outputs.push(y);
        // Keep the constant mean identical to the source model so conditioning
        // on the believed value leaves the posterior mean unchanged.
        Self::assemble_with_mean(&inputs, &outputs, self.kernel.clone(), self.mean)
    }

    fn assemble_with_mean(
        inputs: &[Vec<f64>],
        outputs: &[f64],
        kernel: Kernel,
        mean: f64,
    ) -> Result<GpModel> {
        let mut m = Self::assemble(inputs, outputs, kernel, false)?;
        let n = inputs.len();
        let y = DVector::from_column_slice(outputs);
        let ones = DVector::from_element(n, 1.0);
        let resid = &y - &ones * mean;
        m.alpha = m.chol.solve(&resid);
        m.mean = mean;
        Ok(m)
    }

    /// Reconstruction error of the stored factorization, relative Frobenius.
    pub fn factorization_error(&self) -> f64 {
        let n = self.n_train();
        let mut k = DMatrix::from_fn(n, n, |i, j| {
            self.kernel.cov(&self.train_inputs[i], &self.train_inputs[j])
        });
        for i in 0..n {
            k[(i, i)] += self.nugget;
        }
        let l = self.chol.l();
        let rec = &l * l.transpose();
        ((&rec - &k).norm()) / k.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line_data() -> (Vec<Vec<f64>>, Vec<f64>) {
        let xs = vec![vec![0.1], vec![0.5], vec![0.9]];
        let ys = vec![0.2, 1.0, 1.8];
        (xs, ys)
    }

    #[test]
    fn rejects_single_observation() {
        let err = GpModel::fit(&[vec![0.5]], &[1.0], KernelFamily::Matern52);
        assert!(matches!(err, Err(CehiError::InvalidInput(_))));
    }

    #[test]
    fn rejects_non_finite_outputs() {
        let err = GpModel::fit(
            &[vec![0.1], vec![0.9]],
            &[1.0, f64::NAN],
            KernelFamily::Matern52,
        );
        assert!(matches!(err, Err(CehiError::InvalidInput(_))));
    }

    #[test]
    fn interpolates_training_points_with_fixed_kernel() {
        let (xs, ys) = line_data();
        let kernel = Kernel::new(KernelFamily::Matern52, vec![0.4], 1.0);
        let m = GpModel::with_kernel(&xs, &ys, kernel).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            let (mean, _) = m.predict_one(x);
            assert_relative_eq!(mean, *y, epsilon = 1e-8);
        }
    }

    #[test]
    fn prediction_matches_dense_solve_oracle() {
        // 5-point 1D dataset, theta=0.3, sigma2=1.0; compare the factorized
        // path against a direct dense solve of mu + k(x,X) K^-1 (Y - 1 mu).
        let xs: Vec<Vec<f64>> = vec![vec![0.05], vec![0.3], vec![0.55], vec![0.7], vec![0.95]];
        let ys = vec![0.3, -0.2, 0.8, 0.1, -0.5];
        let kernel = Kernel::new(KernelFamily::Matern52, vec![0.3], 1.0);
        let m = GpModel::with_kernel(&xs, &ys, kernel.clone()).unwrap();

        let n = xs.len();
        let kmat = DMatrix::from_fn(n, n, |i, j| {
            m.kernel.cov(&xs[i], &xs[j]) + if i == j { m.nugget } else { 0.0 }
        });
        let kinv = kmat.try_inverse().unwrap();
        let ones = DVector::from_element(n, 1.0);
        let y = DVector::from_column_slice(&ys);
        let resid = &y - &ones * m.mean;
        let kinv_resid = &kinv * resid;
        for q in [0.0, 0.12, 0.42, 0.63, 0.88, 1.0] {
            let kx = DVector::from_fn(n, |i, _| m.kernel.cov(&[q], &xs[i]));
            let oracle = m.mean + kx.dot(&kinv_resid);
            let (mean, _) = m.predict_one(&[q]);
            assert_relative_eq!(mean, oracle, epsilon = 1e-10);
        }
    }

    #[test]
    fn zero_sd_at_training_points() {
        let (xs, ys) = line_data();
        let m = GpModel::fit(&xs, &ys, KernelFamily::Matern52).unwrap();
        for x in &xs {
            let (_, sd) = m.predict_one(x);
            assert!(sd <= 1e-6 * m.kernel.variance.sqrt() + 1e-9, "sd={sd}");
        }
    }

    #[test]
    fn far_field_variance_limit() {
        // With all correlations negligible, s^2 -> sigma2 (1 + 1/(1^T R^-1 1)).
        let xs = vec![vec![0.0, 0.0], vec![0.02, 0.0], vec![0.0, 0.02]];
        let ys = vec![0.1, 0.2, 0.3];
        let kernel = Kernel::new(KernelFamily::SquaredExponential, vec![0.01, 0.01], 2.0);
        let m = GpModel::with_kernel(&xs, &ys, kernel.clone()).unwrap();
        let n = xs.len();
        let r = DMatrix::from_fn(n, n, |i, j| {
            m.kernel.corr(&xs[i], &xs[j]) + if i == j { m.nugget / m.kernel.variance } else { 0.0 }
        });
        let rinv = r.try_inverse().unwrap();
        let ones = DVector::from_element(n, 1.0);
        let s_r = (ones.transpose() * &rinv * &ones)[(0, 0)];
        let expected = m.kernel.variance * (1.0 + 1.0 / s_r);
        let (_, sd) = m.predict_one(&[1.0, 1.0]);
        assert_relative_eq!(sd * sd, expected, max_relative = 1e-6);
    }

    #[test]
    fn duplicated_query_covariance() {
        let (xs, ys) = line_data();
        let m = GpModel::fit(&xs, &ys, KernelFamily::Matern52).unwrap();
        let post = m.predict(&[vec![0.3], vec![0.3]], true);
        let g = post.cross_cov.unwrap();
        assert_relative_eq!(g[(0, 0)], g[(1, 1)], epsilon = 1e-10);
        assert_relative_eq!(g[(0, 1)], g[(0, 0)], epsilon = 1e-10);
    }

    #[test]
    fn simulation_mean_clt_bound() {
        let (xs, ys) = line_data();
        let m = GpModel::fit(&xs, &ys, KernelFamily::Matern52).unwrap();
        let q = vec![vec![0.25]];
        let (mean, sd) = m.predict_one(&q[0]);
        let draws = m.simulate(&q, 10_000, 7).unwrap();
        let avg: f64 = draws.iter().map(|r| r[0]).sum::<f64>() / draws.len() as f64;
        assert!((avg - mean).abs() <= 4.0 * sd / (10_000f64).sqrt() + 1e-12);
    }

    #[test]
    fn simulation_at_training_point_is_degenerate() {
        let (xs, ys) = line_data();
        let kernel = Kernel::new(KernelFamily::Matern52, vec![0.4], 1.0);
        let m = GpModel::with_kernel(&xs, &ys, kernel).unwrap();
        let draws = m.simulate(&[xs[1].clone()], 50, 3).unwrap();
        for r in &draws {
            // Draw spread is bounded by the jitter floor, sqrt(1e-10 * var).
            assert!((r[0] - ys[1]).abs() < 1e-3, "draw {} vs {}", r[0], ys[1]);
        }
    }

    #[test]
    fn simulation_deterministic_given_seed() {
        let (xs, ys) = line_data();
        let m = GpModel::fit(&xs, &ys, KernelFamily::Matern52).unwrap();
        let q = vec![vec![0.2], vec![0.6], vec![0.8]];
        let a = m.simulate(&q, 5, 99).unwrap();
        let b = m.simulate(&q, 5, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn factorization_reconstructs_covariance() {
        let (xs, ys) = line_data();
        let m = GpModel::fit(&xs, &ys, KernelFamily::Matern52).unwrap();
        assert!(m.factorization_error() < 1e-8);
    }

    #[test]
    fn mle_beats_random_hyperparameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 / 11.0]).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| (6.0 * x[0]).sin() + 0.3 * x[0])
            .collect();
        let fitted = GpModel::fit(&xs, &ys, KernelFamily::Matern52).unwrap();
        let ll_fit = concentrated_ll(
            KernelFamily::Matern52,
            &fitted.kernel.lengthscales,
            &xs,
            &ys,
        );
        for _ in 0..20 {
            let theta = vec![rng.gen_range(THETA_MIN..THETA_MAX)];
            let ll = concentrated_ll(KernelFamily::Matern52, &theta, &xs, &ys);
            assert!(ll_fit >= ll - 1e-6, "mle {ll_fit} < random {ll}");
        }
    }

    #[test]
    fn augment_keeps_mean_shrinks_variance() {
        let (xs, ys) = line_data();
        let m = GpModel::fit(&xs, &ys, KernelFamily::Matern52).unwrap();
        let (believed, _) = m.predict_one(&[0.3]);
        let m2 = m.augment(&[0.3], believed).unwrap();
        for q in [0.05, 0.2, 0.45, 0.7, 0.99] {
            let (mu1, sd1) = m.predict_one(&[q]);
            let (mu2, sd2) = m2.predict_one(&[q]);
            assert_relative_eq!(mu1, mu2, epsilon = 1e-6);
            assert!(sd2 <= sd1 + 1e-9);
        }
    }
}
