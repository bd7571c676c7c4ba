//! Approximate message passing with the Bayes-optimal Bernoulli–Gaussian
//! denoiser, and its scalar state evolution.
//!
//! Measurements follow `y = sqrt(gamma) Phi x + z` with `Phi` an `M x N`
//! matrix whose entries have variance `1/N` (unit-norm rows on average) and
//! `z ~ N(0, I)`. Internally the system is rescaled to `A = sqrt(N/M) Phi`,
//! whose columns have unit norm on average, with noise variance
//! `1 / (gamma R)`; the state evolution of that system is exactly the
//! fixed-point iteration `eta <- 1 / (1 + gamma * mmse(p, eta * gamma * R))`.
//!
//! The denoiser's effective noise variance is by default the empirical residual
//! energy `|z|^2 / M`; [`EffectiveVariance::Predicted`] uses the state-evolution
//! value `1 / (eta gamma R)` instead, which tracks finite instances less well.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::prior::SparseGaussianPrior;
use crate::tanaka::{ChannelSpec, FixedPoint};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Rescales every row to unit Euclidean norm (zero rows are left alone).
    pub fn normalize_rows(&mut self) {
        for row in self.data.chunks_mut(self.cols) {
            let norm = libm::sqrt(row.iter().map(|v| v * v).sum::<f64>());
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
    }

    /// `out = scale * self * v`
    pub fn mul_vec_into(&self, v: &[f64], scale: f64, out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.data.chunks(self.cols)) {
            *o = scale * row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    /// `out = scale * self^T * v`
    pub fn mul_transpose_vec_into(&self, v: &[f64], scale: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (&vi, row) in v.iter().zip(self.data.chunks(self.cols)) {
            let c = scale * vi;
            for (o, a) in out.iter_mut().zip(row) {
                *o += c * a;
            }
        }
    }
}

/// How AMP tracks the effective noise variance of its pseudo-data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EffectiveVariance {
    /// `||z||^2 / M` from the current residual. Tracks the instance rather
    /// than the large-system prediction, which keeps finite-N runs near the
    /// algorithmic threshold from stalling.
    #[default]
    Residual,
    /// `noise_var + mean(posterior var) / R`, the state-evolution update.
    Predicted,
}

impl EffectiveVariance {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Residual => "residual",
            Self::Predicted => "predicted",
        }
    }
}

impl core::str::FromStr for EffectiveVariance {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "residual" => Ok(Self::Residual),
            "predicted" => Ok(Self::Predicted),
            _ => Err(Error::Domain(
                "effective variance must be residual or predicted",
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmpConfig {
    pub max_iters: usize,
    /// Stop once `||x_t - x_{t-1}|| <= tol * ||x_t||`.
    pub tol: f64,
    /// Weight of the previous estimate in `x_t`; 0 disables damping.
    pub damping: f64,
    pub variance: EffectiveVariance,
}

impl Default for AmpConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-6,
            damping: 0.0,
            variance: EffectiveVariance::Residual,
        }
    }
}

impl AmpConfig {
    pub fn new(max_iters: usize, tol: f64, damping: f64) -> Result<Self> {
        let cfg = Self {
            max_iters,
            tol,
            damping,
            variance: EffectiveVariance::Residual,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_variance(mut self, variance: EffectiveVariance) -> Self {
        self.variance = variance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Domain("max_iters must be at least 1"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Domain("tol must be positive"));
        }
        if !(0.0..=1.0).contains(&self.damping) || (self.damping == 1.0) {
            return Err(Error::Domain("damping must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Per-iteration history of one AMP run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AmpTrace {
    /// Effective noise variance of the pseudo-data after each iteration,
    /// in the rescaled (unit-column) system.
    pub effective_var: Vec<f64>,
    /// Empirical MSE against the ground truth, one entry per iteration when
    /// the truth was supplied.
    pub mse: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmpOutcome {
    pub estimate: Vec<f64>,
    pub trace: AmpTrace,
    pub iterations: usize,
    pub converged: bool,
    /// The average posterior variance exceeded `10 p` or became non-finite.
    pub diverged: bool,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Runs AMP on `y = sqrt(gamma) Phi x + z`.
pub fn amp_reconstruct(
    y: &[f64],
    phi: &Matrix,
    gamma: f64,
    prior: &SparseGaussianPrior,
    cfg: &AmpConfig,
    truth: Option<&[f64]>,
) -> Result<AmpOutcome> {
    cfg.validate()?;
    let (m, n) = (phi.rows(), phi.cols());
    if y.len() != m {
        return Err(Error::Dimension {
            expected: m,
            found: y.len(),
        });
    }
    if let Some(t) = truth {
        if t.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: t.len(),
            });
        }
    }
    if m == 0 || n == 0 {
        return Err(Error::Domain("measurement matrix must be nonempty"));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Domain("gamma must be positive and finite"));
    }

    let delta = m as f64 / n as f64;
    let scale = libm::sqrt(1.0 / delta);
    let noise_var = 1.0 / (gamma * delta);
    let y_scaled: Vec<f64> = y.iter().map(|v| v * scale / libm::sqrt(gamma)).collect();

    let mut x = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut pseudo = vec![0.0; n];
    let mut residual = y_scaled.clone();
    let mut ax = vec![0.0; m];
    let mut tau2 = noise_var + prior.second_moment() / delta;

    let mut trace = AmpTrace {
        effective_var: Vec::with_capacity(cfg.max_iters),
        mse: truth.map(|_| Vec::with_capacity(cfg.max_iters)),
    };
    let mut converged = false;
    let mut diverged = false;
    let mut iterations = 0;

    for _ in 0..cfg.max_iters {
        iterations += 1;
        phi.mul_transpose_vec_into(&residual, scale, &mut pseudo);
        let mut var_sum = 0.0;
        for i in 0..n {
            let post = prior.posterior_mean_var(x[i] + pseudo[i], tau2)?;
            x_new[i] = post.mean;
            var_sum += post.var;
        }
        let var_mean = var_sum / n as f64;
        if cfg.damping > 0.0 {
            for (xn, xo) in x_new.iter_mut().zip(&x) {
                *xn = (1.0 - cfg.damping) * *xn + cfg.damping * xo;
            }
        }

        let onsager = var_mean / (delta * tau2);
        phi.mul_vec_into(&x_new, scale, &mut ax);
        for ((r, yv), axv) in residual.iter_mut().zip(&y_scaled).zip(&ax) {
            *r = yv - axv + onsager * *r;
        }
        tau2 = match cfg.variance {
            EffectiveVariance::Residual => residual.iter().map(|r| r * r).sum::<f64>() / m as f64,
            EffectiveVariance::Predicted => noise_var + var_mean / delta,
        };

        trace.effective_var.push(tau2);
        if let (Some(t), Some(mse)) = (truth, trace.mse.as_mut()) {
            mse.push(sq_dist(&x_new, t) / n as f64);
        }

        let change = sq_dist(&x_new, &x);
        let norm = x_new.iter().map(|v| v * v).sum::<f64>();
        core::mem::swap(&mut x, &mut x_new);

        if !var_mean.is_finite() || var_mean > 10.0 * prior.p() || !tau2.is_finite() {
            diverged = true;
            break;
        }
        if change <= cfg.tol * cfg.tol * norm {
            converged = true;
            break;
        }
    }

    Ok(AmpOutcome {
        estimate: x,
        trace,
        iterations,
        converged,
        diverged,
    })
}

/// Outcome of the state-evolution recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEvolution {
    /// `eta_0, eta_1, ...`, starting from the uninformed `1 / (1 + gamma p)`.
    pub trajectory: Vec<f64>,
    /// Fixed point of the equation nearest to the last iterate.
    pub limit: FixedPoint,
    pub converged: bool,
    /// The last iterate is more than `1e-6` (relative) away from `limit`.
    pub anomaly: bool,
}

/// Iterates `eta <- 1 / (1 + gamma * mmse(p, eta gamma R))` from the
/// uninformed start until successive iterates agree to `1e-12` (relative)
/// or `10 * cfg.max_iters` steps.
pub fn state_evolution(spec: &ChannelSpec, cfg: &AmpConfig) -> Result<StateEvolution> {
    cfg.validate()?;
    let (gamma, rate) = (spec.gamma(), spec.rate());
    let prior = spec.prior();
    let mut eta = 1.0 / (1.0 + gamma * prior.p());
    let mut trajectory = vec![eta];
    let mut converged = false;
    for _ in 0..cfg.max_iters * 10 {
        let next = 1.0 / (1.0 + gamma * prior.scalar_mmse(eta * gamma * rate)?);
        trajectory.push(next);
        let step = libm::fabs(next - eta);
        eta = next;
        if step <= 1e-12 * eta {
            converged = true;
            break;
        }
    }
    let fps = spec.fixed_points()?;
    let limit = *fps
        .iter()
        .min_by(|a, b| libm::fabs(a.eta - eta).total_cmp(&libm::fabs(b.eta - eta)))
        .ok_or(Error::Internal("no fixed point to match"))?;
    let anomaly = libm::fabs(limit.eta - eta) > 1e-6 * limit.eta;
    Ok(StateEvolution {
        trajectory,
        limit,
        converged,
        anomaly,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_matrix() -> Matrix {
        Matrix::from_row_major(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap()
    }

    #[test]
    fn matvec_and_transpose() {
        let a = small_matrix();
        let mut out = vec![0.0; 2];
        a.mul_vec_into(&[1.0, 0.0, -1.0], 2.0, &mut out);
        assert_eq!(out, vec![-4.0, -4.0]);
        let mut out_t = vec![0.0; 3];
        a.mul_transpose_vec_into(&[1.0, 1.0], 1.0, &mut out_t);
        assert_eq!(out_t, vec![5.0, 7.0, 9.0]);
    }

    #[test]
    fn matrix_shape_checked() {
        assert!(Matrix::from_row_major(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn row_normalization() {
        let mut a = small_matrix();
        a.normalize_rows();
        for i in 0..2 {
            let norm: f64 = a.row(i).iter().map(|v| v * v).sum();
            assert!((norm - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn config_validation() {
        assert!(AmpConfig::new(0, 1e-6, 0.0).is_err());
        assert!(AmpConfig::new(10, 0.0, 0.0).is_err());
        assert!(AmpConfig::new(10, 1e-6, 1.0).is_err());
        assert!(AmpConfig::new(10, 1e-6, -0.1).is_err());
        assert!(AmpConfig::new(10, 1e-6, 0.5).is_ok());
    }

    #[test]
    fn zero_observation_gives_zero_estimate() {
        let prior = SparseGaussianPrior::new(0.1).unwrap();
        let a = small_matrix();
        let out =
            amp_reconstruct(&[0.0, 0.0], &a, 100.0, &prior, &AmpConfig::default(), None).unwrap();
        assert!(out.estimate.iter().all(|&v| v == 0.0));
        assert!(out.converged);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let prior = SparseGaussianPrior::new(0.1).unwrap();
        let a = small_matrix();
        let err = amp_reconstruct(&[0.0; 3], &a, 1.0, &prior, &AmpConfig::default(), None);
        assert!(matches!(
            err,
            Err(Error::Dimension {
                expected: 2,
                found: 3
            })
        ));
        let err = amp_reconstruct(
            &[0.0; 2],
            &a,
            1.0,
            &prior,
            &AmpConfig::default(),
            Some(&[0.0]),
        );
        assert!(matches!(
            err,
            Err(Error::Dimension {
                expected: 3,
                found: 1
            })
        ));
    }

    #[test]
    fn gaussian_state_evolution_reaches_unique_root() {
        let spec = ChannelSpec::new(1.0, 10.0, 0.5).unwrap();
        let se = state_evolution(&spec, &AmpConfig::default()).unwrap();
        assert!(se.converged);
        assert!(!se.anomaly);
        assert!(spec.relative_residual(&se.limit) < 1e-8);
    }
}
