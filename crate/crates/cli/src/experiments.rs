//! Monte-Carlo harness: instance generation, AMP trials and comparison
//! against the fixed-point predictions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use tanaka_core::amp::{amp_reconstruct, AmpConfig, Matrix};
use tanaka_core::regions::{RegionLabel, RegionMap};
use tanaka_core::tanaka::{ChannelSpec, EnergyBase};
use tanaka_core::units::db_to_linear;
use tanaka_core::{Error, Result, SparseGaussianPrior};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub p: f64,
    pub n: usize,
    pub rates: Vec<f64>,
    pub gammas_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub amp: AmpConfig,
    /// Rescale every row of the measurement matrix to unit norm exactly.
    pub normalize_rows: bool,
    pub energy_base: EnergyBase,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            p: 0.1,
            n: 5000,
            rates: Vec::new(),
            gammas_db: Vec::new(),
            trials: 20,
            seed: 0,
            amp: AmpConfig::default(),
            normalize_rows: false,
            energy_base: EnergyBase::Nats,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        SparseGaussianPrior::new(self.p)?;
        self.amp.validate()?;
        if self.n < 100 {
            return Err(Error::Domain("n must be at least 100"));
        }
        if self.trials == 0 {
            return Err(Error::Domain("trials must be at least 1"));
        }
        if self.rates.is_empty() || self.gammas_db.is_empty() {
            return Err(Error::Domain("rate and gamma grids must be nonempty"));
        }
        if self.rates.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            return Err(Error::Domain("rates must lie in (0, 1)"));
        }
        if self.gammas_db.iter().any(|g| !g.is_finite()) {
            return Err(Error::Domain("gamma values must be finite"));
        }
        if self.rates.iter().any(|&r| measurements(r, self.n) == 0) {
            return Err(Error::Domain("rate * n rounds to zero measurements"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub empirical_mse: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub rate: f64,
    pub gamma_db: f64,
    pub mean_mse: f64,
    pub std_err: f64,
    pub tanaka_mmse: f64,
    pub smallest_fp_mmse: f64,
    pub region: RegionLabel,
    pub nonconverged_trials: usize,
}

/// One measurement problem `y = sqrt(gamma) Phi x + z`.
#[derive(Debug, Clone)]
pub struct Instance {
    pub x: Vec<f64>,
    pub phi: Matrix,
    pub y: Vec<f64>,
}

/// `M = round(rate * n)`.
pub fn measurements(rate: f64, n: usize) -> usize {
    (rate * n as f64).round() as usize
}

/// Generator for one trial, keyed on the whole index tuple so that no two
/// cells or trials share a stream.
pub fn trial_rng(
    seed: u64,
    rate_index: usize,
    gamma_index: usize,
    trial_index: usize,
) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(rate_index as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(gamma_index as u64).to_le_bytes());
    key[24..].copy_from_slice(&(trial_index as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Draws `x` from the prior, `Phi` with i.i.d. `N(0, 1/n)` entries (row
/// major) and unit Gaussian noise, in that order.
pub fn generate_instance<R: Rng>(
    rng: &mut R,
    p: f64,
    n: usize,
    m: usize,
    gamma: f64,
    normalize_rows: bool,
) -> Result<Instance> {
    let x: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random::<f64>() < p {
                rng.sample(StandardNormal)
            } else {
                0.0
            }
        })
        .collect();
    let sd = 1.0 / (n as f64).sqrt();
    let data = (0..m * n)
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut phi = Matrix::from_row_major(m, n, data)?;
    if normalize_rows {
        phi.normalize_rows();
    }
    let mut y = vec![0.0; m];
    phi.mul_vec_into(&x, gamma.sqrt(), &mut y);
    for v in &mut y {
        *v += rng.sample::<f64, _>(StandardNormal);
    }
    Ok(Instance { x, phi, y })
}

pub fn run_trial(
    cfg: &ExperimentConfig,
    rate_index: usize,
    gamma_index: usize,
    trial_index: usize,
) -> Result<TrialResult> {
    let rate = *cfg
        .rates
        .get(rate_index)
        .ok_or(Error::Domain("rate index out of range"))?;
    let gamma_db = *cfg
        .gammas_db
        .get(gamma_index)
        .ok_or(Error::Domain("gamma index out of range"))?;
    let gamma = db_to_linear(gamma_db);
    let prior = SparseGaussianPrior::new(cfg.p)?;
    let mut rng = trial_rng(cfg.seed, rate_index, gamma_index, trial_index);
    let inst = generate_instance(
        &mut rng,
        cfg.p,
        cfg.n,
        measurements(rate, cfg.n),
        gamma,
        cfg.normalize_rows,
    )?;
    let out = amp_reconstruct(&inst.y, &inst.phi, gamma, &prior, &cfg.amp, None)?;
    let empirical_mse = out
        .estimate
        .iter()
        .zip(&inst.x)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / cfg.n as f64;
    if !empirical_mse.is_finite() {
        return Err(Error::Internal("non-finite reconstruction error"));
    }
    Ok(TrialResult {
        empirical_mse,
        iterations: out.iterations,
        converged: out.converged,
    })
}

/// Runs every trial of one cell; output order follows the trial index.
pub fn run_cell(
    cfg: &ExperimentConfig,
    rate_index: usize,
    gamma_index: usize,
) -> Result<Vec<TrialResult>> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, rate_index, gamma_index, t))
        .collect()
}

/// Sample mean and standard error (sample standard deviation over
/// `sqrt(k)`), two-pass. A single sample has zero standard error.
pub fn mean_and_std_err(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// One row per `(rate, gamma)` cell, rate-major.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<Vec<ComparisonRow>> {
    cfg.validate()?;
    let map = RegionMap::new(cfg.p, cfg.energy_base)?;
    let mut rows = Vec::with_capacity(cfg.rates.len() * cfg.gammas_db.len());
    for (ri, &rate) in cfg.rates.iter().enumerate() {
        for (gi, &gamma_db) in cfg.gammas_db.iter().enumerate() {
            let gamma = db_to_linear(gamma_db);
            let sol = ChannelSpec::new(cfg.p, gamma, rate)?
                .with_energy_base(cfg.energy_base)
                .solve()?;
            let region = map.classify_solved(rate, gamma, &sol)?;
            let trials = run_cell(cfg, ri, gi)?;
            let mses: Vec<f64> = trials.iter().map(|t| t.empirical_mse).collect();
            let (mean_mse, std_err) = mean_and_std_err(&mses);
            rows.push(ComparisonRow {
                rate,
                gamma_db,
                mean_mse,
                std_err,
                tanaka_mmse: sol.selected().mmse,
                smallest_fp_mmse: sol.smallest().mmse,
                region,
                nonconverged_trials: trials.iter().filter(|t| !t.converged).count(),
            });
        }
    }
    Ok(rows)
}
