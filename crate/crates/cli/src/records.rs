//! Row types of every emitted table. Field names are the column headers.

use serde::{Deserialize, Serialize};

use crate::output::round12;

pub const FIXED_POINT_HEADERS: &[&str] =
    &["eta", "a", "mmse", "free_energy_nats", "branch", "selected"];
pub const SURFACE_HEADERS: &[&str] = &[
    "rate",
    "gamma_db",
    "mmse",
    "eta",
    "fixed_point_count",
    "region",
];
pub const THRESHOLD_HEADERS: &[&str] = &[
    "gamma_db",
    "r_robust",
    "r_consistency",
    "r_low_noise",
    "r_bp",
];
pub const RBP_HEADERS: &[&str] = &["p", "r_bp"];
pub const SIMULATE_HEADERS: &[&str] = &[
    "trial",
    "empirical_mse",
    "std_err",
    "iterations",
    "converged",
];
pub const COMPARISON_HEADERS: &[&str] = &[
    "rate",
    "gamma_db",
    "mean_mse",
    "std_err",
    "tanaka_mmse",
    "smallest_fp_mmse",
    "region",
    "nonconverged_trials",
];

fn r(x: f64) -> f64 {
    round12(x)
}

fn ro(x: Option<f64>) -> Option<f64> {
    x.map(round12)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointRecord {
    pub eta: f64,
    pub a: f64,
    pub mmse: f64,
    /// In the energy base named by the file's `energy_base` comment.
    pub free_energy_nats: f64,
    pub branch: String,
    pub selected: bool,
}

impl FixedPointRecord {
    pub fn new(
        eta: f64,
        a: f64,
        mmse: f64,
        free_energy: f64,
        branch: &str,
        selected: bool,
    ) -> Self {
        Self {
            eta: r(eta),
            a: r(a),
            mmse: r(mmse),
            free_energy_nats: r(free_energy),
            branch: branch.into(),
            selected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRecord {
    pub rate: f64,
    pub gamma_db: f64,
    pub mmse: f64,
    pub eta: f64,
    pub fixed_point_count: usize,
    pub region: String,
}

impl SurfaceRecord {
    pub fn new(
        rate: f64,
        gamma_db: f64,
        mmse: f64,
        eta: f64,
        fixed_point_count: usize,
        region: &str,
    ) -> Self {
        Self {
            rate: r(rate),
            gamma_db: r(gamma_db),
            mmse: r(mmse),
            eta: r(eta),
            fixed_point_count,
            region: region.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRecord {
    pub gamma_db: f64,
    pub r_robust: f64,
    pub r_consistency: Option<f64>,
    pub r_low_noise: Option<f64>,
    pub r_bp: Option<f64>,
}

impl ThresholdRecord {
    pub fn new(
        gamma_db: f64,
        r_robust: f64,
        rc: Option<f64>,
        rl: Option<f64>,
        rbp: Option<f64>,
    ) -> Self {
        Self {
            gamma_db: r(gamma_db),
            r_robust: r(r_robust),
            r_consistency: ro(rc),
            r_low_noise: ro(rl),
            r_bp: ro(rbp),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbpRecord {
    pub p: f64,
    pub r_bp: Option<f64>,
}

impl RbpRecord {
    pub fn new(p: f64, r_bp: Option<f64>) -> Self {
        Self {
            p: r(p),
            r_bp: ro(r_bp),
        }
    }
}

/// Per-trial row, or the summary row with `trial = "summary"`, the mean MSE,
/// its standard error, the total iteration count and whether every trial
/// converged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateRecord {
    pub trial: String,
    pub empirical_mse: f64,
    pub std_err: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl SimulateRecord {
    pub fn new(
        trial: String,
        empirical_mse: f64,
        std_err: Option<f64>,
        iterations: usize,
        converged: bool,
    ) -> Self {
        Self {
            trial,
            empirical_mse: r(empirical_mse),
            std_err: ro(std_err),
            iterations,
            converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub rate: f64,
    pub gamma_db: f64,
    pub mean_mse: f64,
    pub std_err: f64,
    pub tanaka_mmse: f64,
    pub smallest_fp_mmse: f64,
    pub region: String,
    pub nonconverged_trials: usize,
}

impl From<&crate::experiments::ComparisonRow> for ComparisonRecord {
    fn from(row: &crate::experiments::ComparisonRow) -> Self {
        Self {
            rate: r(row.rate),
            gamma_db: r(row.gamma_db),
            mean_mse: r(row.mean_mse),
            std_err: r(row.std_err),
            tanaka_mmse: r(row.tanaka_mmse),
            smallest_fp_mmse: r(row.smallest_fp_mmse),
            region: row.region.region.as_str().into(),
            nonconverged_trials: row.nonconverged_trials,
        }
    }
}
