//! Sparse Gaussian (Bernoulli–Gaussian) signal model and the statistics of
//! its scalar Gaussian channel `u = sqrt(s) x + z`, `z ~ N(0, 1)`.

use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::quad;

/// Absolute error certified for [`SparseGaussianPrior::scalar_mmse`] and
/// [`SparseGaussianPrior::mutual_information`].
pub const QUAD_ABS_TOL: f64 = 1e-10;

const MMSE_REL_TOL: f64 = 1e-12;
const MI_ABS_TOL: f64 = 1e-12;
const DOMAIN_SIGMAS: f64 = 40.0;
const MIN_ORACLE_SAMPLES: u64 = 100_000;

/// Signal law: with probability `p` a unit-variance Gaussian, otherwise
/// exactly zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseGaussianPrior {
    p: f64,
    ln_p: f64,
    ln_q: f64,
}

/// Scalar channel `u = sqrt(snr_eff) x + z` with unit noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarChannel {
    snr_eff: f64,
}

impl ScalarChannel {
    pub fn new(snr_eff: f64) -> Result<Self> {
        if !snr_eff.is_finite() || snr_eff < 0.0 {
            return Err(Error::Domain(
                "effective SNR must be finite and nonnegative",
            ));
        }
        Ok(Self { snr_eff })
    }

    pub fn snr_eff(&self) -> f64 {
        self.snr_eff
    }
}

/// Conditional mean and variance of the signal given one noisy observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorStats {
    pub mean: f64,
    pub var: f64,
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEstimate {
    pub value: f64,
    pub std_err: f64,
}

#[inline]
fn ln_gauss(y: f64, var: f64) -> f64 {
    -0.5 * (libm::log(2.0 * PI * var) + y * y / var)
}

#[inline]
fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + libm::log1p(libm::exp(lo - hi))
}

#[inline]
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

impl SparseGaussianPrior {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Domain("sparsity rate must lie in (0, 1]"));
        }
        Ok(Self {
            p,
            ln_p: libm::log(p),
            ln_q: libm::log1p(-p),
        })
    }

    /// Sparsity rate.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// `E[x^2]`, which equals the sparsity rate.
    pub fn second_moment(&self) -> f64 {
        self.p
    }

    fn check_snr(s: f64) -> Result<()> {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::Domain(
                "effective SNR must be finite and nonnegative",
            ));
        }
        Ok(())
    }

    fn domain(s: f64) -> alloc::vec::Vec<f64> {
        quad::geometric_breakpoints(0.25, DOMAIN_SIGMAS * libm::sqrt(s + 1.0))
    }

    /// MMSE of estimating `x` from `sqrt(s) x + z`.
    ///
    /// Uses `mmse = p / (1 + s) + s / (1 + s)^2 * E[y^2 r(y) (1 - r(y))]`,
    /// where `r` is the posterior probability of the nonzero component. This
    /// is the same integral as `p - E[E[x|y]^2]` but without the cancellation
    /// that destroys relative accuracy at high SNR.
    pub fn scalar_mmse(&self, s: f64) -> Result<f64> {
        Self::check_snr(s)?;
        if s == 0.0 {
            return Ok(self.p);
        }
        let gaussian_part = self.p / (1.0 + s);
        if self.p == 1.0 {
            return Ok(gaussian_part);
        }
        let wide = s + 1.0;
        let c_active = self.ln_p + ln_gauss(0.0, wide);
        let c_zero = self.ln_q + ln_gauss(0.0, 1.0);
        let integrand = |y: f64| {
            let a = c_active - 0.5 * y * y / wide;
            let b = c_zero - 0.5 * y * y;
            let (lo, d) = if a < b { (a, b - a) } else { (b, a - b) };
            y * y * libm::exp(lo) / (1.0 + libm::exp(-d))
        };
        // y^2 (1 - p) N(y; 0, 1) bounds the integrand, so nothing beyond
        // |y| = 40 survives in double precision.
        let upper = (DOMAIN_SIGMAS * libm::sqrt(wide)).min(DOMAIN_SIGMAS);
        let pts = quad::geometric_breakpoints(0.25, upper);
        let est = quad::integrate(integrand, &pts, 1e-300, MMSE_REL_TOL)?;
        let abs_err = 2.0 * est.abs_err * s / (wide * wide);
        if abs_err > QUAD_ABS_TOL {
            return Err(Error::Quadrature {
                requested: QUAD_ABS_TOL,
                achieved: abs_err,
            });
        }
        Ok(gaussian_part + 2.0 * est.value * s / (wide * wide))
    }

    /// Monte-Carlo estimate of [`Self::scalar_mmse`] from `samples` draws of
    /// `(x, u)` denoised with [`Self::posterior_mean_var`].
    pub fn scalar_mmse_oracle(&self, s: f64, samples: u64, seed: u64) -> Result<OracleEstimate> {
        Self::check_snr(s)?;
        if samples < MIN_ORACLE_SAMPLES {
            return Err(Error::Domain("oracle needs at least 1e5 samples"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sqrt_s = libm::sqrt(s);
        let (mut mean, mut m2) = (0.0f64, 0.0f64);
        for i in 0..samples {
            let active = rng.random::<f64>() < self.p;
            let g: f64 = rng.sample(StandardNormal);
            let z: f64 = rng.sample(StandardNormal);
            let x = if active { g } else { 0.0 };
            let estimate = if s > 0.0 {
                self.posterior_mean_var((sqrt_s * x + z) / sqrt_s, 1.0 / s)?
                    .mean
            } else {
                0.0
            };
            let err = (x - estimate) * (x - estimate);
            let delta = err - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (err - mean);
        }
        let n = samples as f64;
        let var = m2 / (n - 1.0);
        Ok(OracleEstimate {
            value: mean,
            std_err: libm::sqrt(var / n),
        })
    }

    /// Posterior mean and variance of `x` given `u = x + w`,
    /// `w ~ N(0, noise_var)`.
    pub fn posterior_mean_var(&self, u: f64, noise_var: f64) -> Result<PosteriorStats> {
        if !(noise_var.is_finite() && noise_var > 0.0) {
            return Err(Error::Domain("noise variance must be positive"));
        }
        let shrink = 1.0 / (1.0 + noise_var);
        let m = u * shrink;
        let v = noise_var * shrink;
        if self.p == 1.0 {
            return Ok(PosteriorStats { mean: m, var: v });
        }
        // log-odds of the active component
        let llr = self.ln_p - self.ln_q - 0.5 * libm::log1p(1.0 / noise_var)
            + 0.5 * u * u * shrink / noise_var;
        let r = logistic(llr);
        let mean = r * m;
        let var = r * v + r * (1.0 - r) * m * m;
        Ok(PosteriorStats { mean, var })
    }

    /// `I(x; sqrt(s) x + z)` in nats, as `h(Y) - h(Z)`.
    pub fn mutual_information(&self, s: f64) -> Result<f64> {
        Self::check_snr(s)?;
        if s == 0.0 {
            return Ok(0.0);
        }
        if self.p == 1.0 {
            return Ok(0.5 * libm::log1p(s));
        }
        let wide = s + 1.0;
        let c_active = self.ln_p + ln_gauss(0.0, wide);
        let c_zero = self.ln_q + ln_gauss(0.0, 1.0);
        let neg_f_ln_f = |y: f64| {
            let lf = log_add_exp(c_active - 0.5 * y * y / wide, c_zero - 0.5 * y * y);
            -libm::exp(lf) * lf
        };
        let est = quad::integrate(neg_f_ln_f, &Self::domain(s), MI_ABS_TOL, 0.0)?;
        if 2.0 * est.abs_err > QUAD_ABS_TOL {
            return Err(Error::Quadrature {
                requested: QUAD_ABS_TOL,
                achieved: 2.0 * est.abs_err,
            });
        }
        let h_noise = 0.5 * libm::log(2.0 * PI * core::f64::consts::E);
        Ok((2.0 * est.value - h_noise).max(0.0))
    }

    /// Leading-order high-SNR MMSE, `p / s`.
    pub fn mmse_low_noise_approx(&self, s: f64) -> Result<f64> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::Domain("low-noise approximation needs s > 0"));
        }
        Ok(self.p / s)
    }

    /// MMSE over a [`ScalarChannel`].
    pub fn channel_mmse(&self, channel: ScalarChannel) -> Result<f64> {
        self.scalar_mmse(channel.snr_eff())
    }
}
