//! Gaussian-process surrogate: kernels, exact conditioning, marginal
//! likelihood fitting.
//!
//! Inputs are expected pre-normalized to the unit cube. Outputs are centered
//! on the training mean, which acts as the constant prior mean; hyperparameters
//! are always in output units. `fit` standardizes internally during the
//! marginal-likelihood search and rescales the result back.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Rbf,
    Matern52,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl KernelSpec {
    pub fn isotropic(family: KernelFamily, dim: usize, ell: f64) -> Self {
        KernelSpec {
            family,
            lengthscales: vec![ell; dim],
            signal_variance: 1.0,
            noise_variance: 0.0,
        }
    }

    /// Scaled Euclidean distance between two points.
    fn scaled_dist(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .zip(&self.lengthscales)
            .map(|((&a, &b), &ell)| ((a - b) / ell).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Noise-free covariance between two inputs.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        debug_assert_eq!(x.len(), self.lengthscales.len());
        let r = self.scaled_dist(x, y);
        match self.family {
            KernelFamily::Rbf => self.signal_variance * (-0.5 * r * r).exp(),
            KernelFamily::Matern52 => {
                let s = 5.0f64.sqrt() * r;
                self.signal_variance * (1.0 + s + s * s / 3.0) * (-s).exp()
            }
        }
    }
}

/// Covariance between two points, adding the white-noise term when they are
/// the same training point.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64], same_point: bool) -> f64 {
    spec.eval(x, y) + if same_point { spec.noise_variance } else { 0.0 }
}

/// Hyperparameter search bounds (log-space coordinate ascent).
const ELL_BOUNDS: (f64, f64) = (0.005, 2.0);
const SIGNAL_BOUNDS: (f64, f64) = (0.05, 20.0);
const NOISE_BOUNDS: (f64, f64) = (1e-6, 1.0);
const FIT_RESTARTS: usize = 5;

/// Fitted GP with cached factorization for posterior queries. Immutable after
/// construction.
#[derive(Debug, Clone)]
pub struct GpModel {
    pub kernel: KernelSpec,
    train_x: Vec<Vec<f64>>,
    y_mean: f64,
    chol: Option<Cholesky<f64, Dyn>>,
    /// `(K + noise I)^{-1} (y - y_mean)`, cached.
    alpha: DVector<f64>,
    pub log_marginal: f64,
}

fn covariance_matrix(spec: &KernelSpec, xs: &[Vec<f64>]) -> DMatrix<f64> {
    let n = xs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = spec.eval(&xs[i], &xs[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] += spec.noise_variance;
    }
    k
}

/// Cholesky with diagonal jitter escalation from 1e-10 up to 1e-4.
fn cholesky_with_jitter(k: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = k.clone().cholesky() {
        return Ok(c);
    }
    let mut jitter = 1e-10;
    while jitter <= 1e-4 {
        let mut kj = k.clone();
        for i in 0..kj.nrows() {
            kj[(i, i)] += jitter;
        }
        if let Some(c) = kj.cholesky() {
            return Ok(c);
        }
        jitter *= 10.0;
    }
    Err(Error::Numerics(
        "covariance matrix not positive definite after jitter escalation".into(),
    ))
}

fn log_marginal_likelihood(spec: &KernelSpec, xs: &[Vec<f64>], y_std: &DVector<f64>) -> Option<f64> {
    let k = covariance_matrix(spec, xs);
    let chol = k.cholesky()?;
    let alpha = chol.solve(y_std);
    let n = xs.len() as f64;
    let log_det: f64 = (0..xs.len())
        .map(|i| chol.l_dirty()[(i, i)].ln())
        .sum::<f64>();
    Some(-0.5 * y_std.dot(&alpha) - log_det - 0.5 * n * (2.0 * std::f64::consts::PI).ln())
}

impl GpModel {
    /// Build a model with fixed hyperparameters (no fitting).
    pub fn with_hyperparams(kernel: KernelSpec, train_x: &[Vec<f64>], train_y: &[f64]) -> Result<Self> {
        if train_x.len() != train_y.len() {
            return Err(Error::Input("x/y length mismatch".into()));
        }
        let n = train_x.len();
        if n == 0 {
            return Ok(GpModel {
                kernel,
                train_x: Vec::new(),
                y_mean: 0.0,
                chol: None,
                alpha: DVector::zeros(0),
                log_marginal: 0.0,
            });
        }
        let y_mean = train_y.iter().sum::<f64>() / n as f64;
        let y_c = DVector::from_iterator(n, train_y.iter().map(|&y| y - y_mean));
        let k = covariance_matrix(&kernel, train_x);
        let chol = cholesky_with_jitter(k)?;
        let alpha = chol.solve(&y_c);
        let log_det: f64 = (0..n).map(|i| chol.l_dirty()[(i, i)].ln()).sum();
        let log_marginal =
            -0.5 * y_c.dot(&alpha) - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        Ok(GpModel {
            kernel,
            train_x: train_x.to_vec(),
            y_mean,
            chol: Some(chol),
            alpha,
            log_marginal,
        })
    }

    /// Fit hyperparameters by maximizing the log marginal likelihood with
    /// multi-start log-space coordinate ascent.
    pub fn fit<R: Rng>(
        train_x: &[Vec<f64>],
        train_y: &[f64],
        family: KernelFamily,
        rng: &mut R,
    ) -> Result<Self> {
        if train_x.len() < 2 {
            return Err(Error::Input("GP fit requires at least 2 points".into()));
        }
        let dim = train_x[0].len();
        let (y_mean, y_scale) = standardization(train_y);
        let y_std = DVector::from_iterator(
            train_y.len(),
            train_y.iter().map(|&y| (y - y_mean) / y_scale),
        );

        // Parameter vector: [ln ell_1..d, ln signal_var, ln noise_var].
        let bounds: Vec<(f64, f64)> = std::iter::repeat(ELL_BOUNDS)
            .take(dim)
            .chain([SIGNAL_BOUNDS, NOISE_BOUNDS])
            .collect();
        let spec_of = |p: &[f64]| KernelSpec {
            family,
            lengthscales: p[..dim].iter().map(|v| v.exp()).collect(),
            signal_variance: p[dim].exp(),
            noise_variance: p[dim + 1].exp(),
        };
        let score = |p: &[f64]| log_marginal_likelihood(&spec_of(p), train_x, &y_std);

        let mut best: Option<(Vec<f64>, f64)> = None;
        for restart in 0..FIT_RESTARTS {
            let mut p: Vec<f64> = if restart == 0 {
                // deterministic moderate start
                std::iter::repeat(0.3f64.ln())
                    .take(dim)
                    .chain([0.0, 0.01f64.ln()])
                    .collect()
            } else {
                bounds
                    .iter()
                    .map(|&(lo, hi)| rng.gen_range(lo.ln()..hi.ln()))
                    .collect()
            };
            let Some(mut cur) = score(&p) else { continue };
            let mut step = 2.0f64.ln();
            while step > 0.05 {
                let mut improved = false;
                for i in 0..p.len() {
                    let (lo, hi) = (bounds[i].0.ln(), bounds[i].1.ln());
                    for dir in [step, -step] {
                        let trial = (p[i] + dir).clamp(lo, hi);
                        if trial == p[i] {
                            continue;
                        }
                        let old = p[i];
                        p[i] = trial;
                        match score(&p) {
                            Some(s) if s > cur => {
                                cur = s;
                                improved = true;
                            }
                            _ => p[i] = old,
                        }
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            if best.as_ref().map_or(true, |(_, b)| cur > *b) {
                best = Some((p, cur));
            }
        }

        let (p, _) = best.ok_or_else(|| {
            Error::Numerics("all hyperparameter starts produced singular covariances".into())
        })?;
        // The search ran on standardized outputs; rescale the variance
        // hyperparameters back to output units.
        let mut spec = spec_of(&p);
        spec.signal_variance *= y_scale * y_scale;
        spec.noise_variance *= y_scale * y_scale;
        Self::with_hyperparams(spec, train_x, train_y)
    }

    pub fn num_train(&self) -> usize {
        self.train_x.len()
    }

    /// Constant prior mean in output units.
    pub fn mean_const(&self) -> f64 {
        self.y_mean
    }

    fn cross_cov(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.train_x.len(),
            self.train_x.iter().map(|t| self.kernel.eval(t, x)),
        )
    }

    /// Exact posterior mean and variance at one point, in output units.
    /// Variance is clipped at zero against round-off.
    pub fn posterior(&self, x: &[f64]) -> (f64, f64) {
        let prior_var = self.kernel.eval(x, x) + self.kernel.noise_variance;
        let Some(chol) = &self.chol else {
            return (self.y_mean, prior_var);
        };
        let kx = self.cross_cov(x);
        let mean = self.y_mean + kx.dot(&self.alpha);
        let v = chol.solve(&kx);
        let var = (prior_var - kx.dot(&v)).max(0.0);
        (mean, var)
    }

    /// One joint draw from the posterior over a candidate set.
    pub fn posterior_sample<R: Rng>(&self, candidates: &[Vec<f64>], rng: &mut R) -> Result<Vec<f64>> {
        let m = candidates.len();
        if m == 0 {
            return Ok(Vec::new());
        }
        let mut mean = DVector::zeros(m);
        let mut cov = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = self.kernel.eval(&candidates[i], &candidates[j]);
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
            // Draw noisy predictions, matching `posterior`'s variance.
            cov[(i, i)] += self.kernel.noise_variance;
        }
        match &self.chol {
            None => {
                // prior over the candidates
            }
            Some(chol) => {
                let mut kc = DMatrix::zeros(self.train_x.len(), m);
                for (j, c) in candidates.iter().enumerate() {
                    let col = self.cross_cov(c);
                    kc.set_column(j, &col);
                }
                for (j, _) in candidates.iter().enumerate() {
                    mean[j] = kc.column(j).dot(&self.alpha);
                }
                let solved = chol.solve(&kc);
                cov -= kc.transpose() * solved;
            }
        }
        // symmetrize against round-off before factorizing
        for i in 0..m {
            for j in 0..i {
                let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
            cov[(i, i)] = cov[(i, i)].max(0.0);
        }
        let chol = cholesky_with_jitter(cov)?;
        let z = DVector::from_iterator(m, (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let draw = mean + chol.l() * z;
        Ok(draw.iter().map(|&d| self.y_mean + d).collect())
    }
}

fn standardization(y: &[f64]) -> (f64, f64) {
    if y.is_empty() {
        return (0.0, 1.0);
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let var = y.iter().map(|&v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64;
    let scale = var.sqrt();
    (mean, if scale > 1e-12 { scale } else { 1.0 })
}
