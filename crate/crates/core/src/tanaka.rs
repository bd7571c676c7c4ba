//! Fixed points of `1/eta = 1 + gamma * mmse(p, eta * gamma * R)` and the
//! free energy that selects among them.
//!
//! Roots are searched through `g(eta) = 1 - eta - eta * gamma * mmse`, which
//! is the fixed-point equation multiplied through by `eta`. `g` is positive
//! as `eta -> 0` and negative at `eta = 1`, so there is always at least one
//! root. Coexisting roots alternate between local minima (smallest, largest)
//! and a local maximum (middle) of the free energy.

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::prior::SparseGaussianPrior;

const LOG_GRID_POINTS: usize = 2000;
const LINEAR_GRID_POINTS: usize = 2000;
const LOG_GRID_MIN: f64 = 1e-9;
const GRID_SPLIT: f64 = 1e-2;
const BISECTION_WIDTH: f64 = 1e-12;
const TANGENCY_TOL: f64 = 1e-9;
/// Free energies closer than this are treated as a tie.
pub const ENERGY_TIE_TOL: f64 = 1e-9;

/// Logarithm used in the `(R/2)(eta - 1 - log eta)` term of the free energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnergyBase {
    /// Natural log throughout, consistent with the mutual information in nats.
    #[default]
    Nats,
    /// `log2(eta)` in the second term while the mutual information stays in
    /// nats. Kept for comparison only.
    Mixed,
}

impl EnergyBase {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnergyBase::Nats => "nats",
            EnergyBase::Mixed => "mixed",
        }
    }
}

impl core::str::FromStr for EnergyBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nats" => Ok(EnergyBase::Nats),
            "mixed" => Ok(EnergyBase::Mixed),
            _ => Err(Error::Domain("energy base must be `nats` or `mixed`")),
        }
    }
}

/// Position of a fixed point among the coexisting ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Branch {
    /// Only one fixed point exists.
    Unique,
    Smallest,
    Middle,
    Largest,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Unique => "unique",
            Branch::Smallest => "smallest",
            Branch::Middle => "middle",
            Branch::Largest => "largest",
        }
    }
}

impl core::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unique" => Ok(Branch::Unique),
            "smallest" => Ok(Branch::Smallest),
            "middle" => Ok(Branch::Middle),
            "largest" => Ok(Branch::Largest),
            _ => Err(Error::Domain("unknown branch label")),
        }
    }
}

/// Sparsity rate, inverse noise level (linear) and measurement rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    prior: SparseGaussianPrior,
    gamma: f64,
    rate: f64,
    base: EnergyBase,
}

/// One solution of the fixed-point equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    /// Degradation of the equivalent scalar channel.
    pub eta: f64,
    /// `eta * gamma`; the scalar channel SNR is `a * R`.
    pub a: f64,
    pub mmse: f64,
    /// Free energy in the [`EnergyBase`] of the [`ChannelSpec`].
    pub free_energy: f64,
    pub branch: Branch,
    /// Tangency root: `g` touches zero without changing sign.
    pub degenerate: bool,
}

/// All fixed points together with the free-energy minimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub all: Vec<FixedPoint>,
    pub selected: usize,
    /// The two lowest free energies were within [`ENERGY_TIE_TOL`].
    pub tie: bool,
}

impl Solution {
    pub fn selected(&self) -> &FixedPoint {
        &self.all[self.selected]
    }

    /// The fixed point with the smallest `eta`, the one reached by message
    /// passing from an uninformed start.
    pub fn smallest(&self) -> &FixedPoint {
        &self.all[0]
    }

    pub fn count(&self) -> usize {
        self.all.len()
    }
}

/// One cell of the MMSE surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceRow {
    pub rate: f64,
    pub gamma: f64,
    pub mmse: f64,
    pub fixed_point_count: usize,
    pub eta: f64,
}

impl ChannelSpec {
    pub fn new(p: f64, gamma: f64, rate: f64) -> Result<Self> {
        let prior = SparseGaussianPrior::new(p)?;
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Domain("gamma must be positive and finite"));
        }
        if !(rate > 0.0 && rate < 1.0) {
            return Err(Error::Domain("measurement rate must lie in (0, 1)"));
        }
        Ok(Self {
            prior,
            gamma,
            rate,
            base: EnergyBase::Nats,
        })
    }

    pub fn with_energy_base(mut self, base: EnergyBase) -> Self {
        self.base = base;
        self
    }

    pub fn prior(&self) -> &SparseGaussianPrior {
        &self.prior
    }

    pub fn p(&self) -> f64 {
        self.prior.p()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn energy_base(&self) -> EnergyBase {
        self.base
    }

    fn check_eta(eta: f64) -> Result<()> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::Domain("eta must lie in (0, 1]"));
        }
        Ok(())
    }

    fn mmse_at(&self, eta: f64) -> Result<f64> {
        self.prior.scalar_mmse(eta * self.gamma * self.rate)
    }

    /// `g(eta) = 1 - eta - eta * gamma * mmse(p, eta * gamma * R)`.
    pub fn residual(&self, eta: f64) -> Result<f64> {
        Self::check_eta(eta)?;
        Ok(1.0 - eta - eta * self.gamma * self.mmse_at(eta)?)
    }

    /// `E(eta) = I(x; sqrt(eta gamma R) x + z) + (R/2)(eta - 1 - log eta)`.
    pub fn free_energy(&self, eta: f64) -> Result<f64> {
        Self::check_eta(eta)?;
        let info = self
            .prior
            .mutual_information(eta * self.gamma * self.rate)?;
        let log_eta = match self.base {
            EnergyBase::Nats => libm::log(eta),
            EnergyBase::Mixed => libm::log2(eta),
        };
        Ok(info + 0.5 * self.rate * (eta - 1.0 - log_eta))
    }

    /// Large-`gamma` approximation of the free energy of `fp`, built from
    /// `I ~ (p/2) ln(eta gamma R)`. Smallest and middle branches use
    /// `eta = fp.a / gamma`; largest and unique use `eta = 1 - p/R`.
    /// Only meaningful for `p < R` and large `gamma`; NaN when `R <= p` on
    /// the largest branch.
    pub fn free_energy_asymptotic(&self, fp: &FixedPoint) -> f64 {
        let (p, r, gamma) = (self.p(), self.rate, self.gamma);
        let (coef, log_gamma) = match self.base {
            EnergyBase::Nats => (0.5 * (p - r), libm::log(gamma)),
            EnergyBase::Mixed => (0.5 * (p - r / LN_2), libm::log2(gamma)),
        };
        match fp.branch {
            Branch::Smallest | Branch::Middle => {
                let a = fp.a;
                coef * libm::log(a) + 0.5 * p * libm::log(r) + 0.5 * r * a / gamma - 0.5 * r
                    + 0.5 * r * log_gamma
            }
            Branch::Largest | Branch::Unique => {
                coef * libm::log(1.0 - p / r)
                    + 0.5 * p * (libm::log(r) - 1.0)
                    + 0.5 * p * libm::log(gamma)
            }
        }
    }

    fn eta_grid() -> Vec<f64> {
        let mut grid = Vec::with_capacity(LOG_GRID_POINTS + LINEAR_GRID_POINTS);
        let (lo, hi) = (libm::log(LOG_GRID_MIN), libm::log(GRID_SPLIT));
        for i in 0..LOG_GRID_POINTS {
            let t = i as f64 / (LOG_GRID_POINTS - 1) as f64;
            grid.push(libm::exp(lo + t * (hi - lo)));
        }
        for i in 1..=LINEAR_GRID_POINTS {
            let t = i as f64 / LINEAR_GRID_POINTS as f64;
            grid.push(GRID_SPLIT + t * (1.0 - GRID_SPLIT));
        }
        grid
    }

    fn bisect(&self, mut lo: f64, mut hi: f64, g_lo: f64) -> Result<f64> {
        // Runs to near machine precision: the residual is measured in the
        // `1/eta` form, which amplifies errors in small roots.
        let positive_lo = g_lo > 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= BISECTION_WIDTH.min(4.0 * f64::EPSILON * hi) || mid <= lo || mid >= hi {
                break;
            }
            let g = self.residual(mid)?;
            if g == 0.0 {
                return Ok(mid);
            }
            if (g > 0.0) == positive_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Golden-section minimization of `|g|` on `[lo, hi]`.
    fn min_abs_residual(&self, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
        let inv_phi = 0.5 * (libm::sqrt(5.0) - 1.0);
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let mut f1 = libm::fabs(self.residual(x1)?);
        let mut f2 = libm::fabs(self.residual(x2)?);
        for _ in 0..80 {
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = libm::fabs(self.residual(x1)?);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = libm::fabs(self.residual(x2)?);
            }
        }
        Ok(if f1 < f2 { (x1, f1) } else { (x2, f2) })
    }

    /// All fixed points in `(0, 1]`, ascending in `eta`.
    ///
    /// Sign changes of `g` are bracketed on a 4000-point grid (logarithmic
    /// over `[1e-9, 1e-2]`, linear above) and bisected. Grid minima of `|g|`
    /// without a sign change are refined and reported as a single degenerate
    /// root when `|g|` drops below `1e-9`.
    pub fn fixed_points(&self) -> Result<Vec<FixedPoint>> {
        let grid = Self::eta_grid();
        let mut values = Vec::with_capacity(grid.len());
        for &eta in &grid {
            values.push(self.residual(eta)?);
        }

        let mut roots: Vec<(f64, bool)> = Vec::new();
        for i in 0..grid.len() - 1 {
            let (g0, g1) = (values[i], values[i + 1]);
            if g0 == 0.0 {
                roots.push((grid[i], false));
            } else if g0 * g1 < 0.0 {
                roots.push((self.bisect(grid[i], grid[i + 1], g0)?, false));
            }
        }
        if *values.last().unwrap() == 0.0 {
            roots.push((1.0, false));
        }

        for i in 1..grid.len() - 1 {
            let (gp, g, gn) = (values[i - 1], values[i], values[i + 1]);
            let same_sign = gp * g > 0.0 && g * gn > 0.0;
            let local_min = libm::fabs(g) <= libm::fabs(gp) && libm::fabs(g) <= libm::fabs(gn);
            if same_sign && local_min && libm::fabs(g) < 1e-2 {
                let (eta, resid) = self.min_abs_residual(grid[i - 1], grid[i + 1])?;
                if resid < TANGENCY_TOL {
                    roots.push((eta, true));
                }
            }
        }

        if roots.is_empty() {
            return Err(Error::Internal(
                "fixed-point equation has no root in (0, 1]",
            ));
        }
        roots.sort_by(|a, b| a.0.total_cmp(&b.0));

        let n = roots.len();
        let mut out = Vec::with_capacity(n);
        for (i, &(eta, degenerate)) in roots.iter().enumerate() {
            let branch = match (n, i) {
                (1, _) => Branch::Unique,
                (_, 0) => Branch::Smallest,
                (_, i) if i == n - 1 => Branch::Largest,
                _ => Branch::Middle,
            };
            out.push(FixedPoint {
                eta,
                a: eta * self.gamma,
                mmse: self.mmse_at(eta)?,
                free_energy: self.free_energy(eta)?,
                branch,
                degenerate,
            });
        }
        Ok(out)
    }

    /// Fixed points plus the free-energy minimizer. Ties go to the larger
    /// `eta`.
    pub fn solve(&self) -> Result<Solution> {
        let all = self.fixed_points()?;
        let mut selected = 0;
        for (i, fp) in all.iter().enumerate().skip(1) {
            if fp.free_energy <= all[selected].free_energy + ENERGY_TIE_TOL {
                selected = i;
            }
        }
        let best = all[selected].free_energy;
        let tie = all
            .iter()
            .enumerate()
            .any(|(i, fp)| i != selected && libm::fabs(fp.free_energy - best) < ENERGY_TIE_TOL);
        Ok(Solution { all, selected, tie })
    }

    /// `|1/eta - 1 - gamma * mmse|` relative to `1 + gamma * mmse`.
    pub fn relative_residual(&self, fp: &FixedPoint) -> f64 {
        let rhs = 1.0 + self.gamma * fp.mmse;
        libm::fabs(1.0 / fp.eta - rhs) / rhs
    }
}

/// Solves one `(R, gamma)` cell of the MMSE surface.
pub fn surface_cell(p: f64, rate: f64, gamma: f64, base: EnergyBase) -> Result<SurfaceRow> {
    let sol = ChannelSpec::new(p, gamma, rate)?
        .with_energy_base(base)
        .solve()?;
    let fp = sol.selected();
    Ok(SurfaceRow {
        rate,
        gamma,
        mmse: fp.mmse,
        fixed_point_count: sol.count(),
        eta: fp.eta,
    })
}

/// Selected MMSE over a grid, rate-major.
pub fn mmse_surface(
    p: f64,
    rates: &[f64],
    gammas: &[f64],
    base: EnergyBase,
) -> Result<Vec<SurfaceRow>> {
    if rates.is_empty() || gammas.is_empty() {
        return Err(Error::Domain("surface grids must be nonempty"));
    }
    let mut rows = Vec::with_capacity(rates.len() * gammas.len());
    for &rate in rates {
        for &gamma in gammas {
            rows.push(surface_cell(p, rate, gamma, base)?);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(ChannelSpec::new(0.1, 0.0, 0.2).is_err());
        assert!(ChannelSpec::new(0.1, 1.0, 1.0).is_err());
        assert!(ChannelSpec::new(0.1, 1.0, 0.0).is_err());
        assert!(ChannelSpec::new(0.0, 1.0, 0.5).is_err());
        assert!(ChannelSpec::new(0.1, f64::INFINITY, 0.5).is_err());
    }

    #[test]
    fn residual_domain() {
        let spec = ChannelSpec::new(0.1, 10.0, 0.3).unwrap();
        assert!(spec.residual(0.0).is_err());
        assert!(spec.residual(1.5).is_err());
        assert!(spec.free_energy(-1.0).is_err());
        assert!((spec.residual(1e-15).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_root_is_unique_and_exact() {
        // 1/eta = 1 + gamma / (1 + eta gamma R) has the closed-form root of
        // R gamma eta^2 + (1 + gamma - R gamma) eta - 1 = 0.
        let (gamma, rate) = (1.0, 0.4);
        let spec = ChannelSpec::new(1.0, gamma, rate).unwrap();
        let fps = spec.fixed_points().unwrap();
        assert_eq!(fps.len(), 1);
        let (a, b) = (rate * gamma, 1.0 + gamma - rate * gamma);
        let exact = (-b + (b * b + 4.0 * a).sqrt()) / (2.0 * a);
        assert!((fps[0].eta - exact).abs() < 1e-12);
        assert!(spec.residual(fps[0].eta).unwrap().abs() < 1e-12);
        assert_eq!(fps[0].branch, Branch::Unique);
    }

    #[test]
    fn free_energy_at_eta_one() {
        let spec = ChannelSpec::new(1.0, 1.0, 0.5).unwrap();
        let e = spec.free_energy(1.0).unwrap();
        assert!((e - 0.5 * 1.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn energy_base_parses() {
        assert_eq!("nats".parse::<EnergyBase>().unwrap(), EnergyBase::Nats);
        assert_eq!("mixed".parse::<EnergyBase>().unwrap(), EnergyBase::Mixed);
        assert!("bits".parse::<EnergyBase>().is_err());
    }

    #[test]
    fn mixed_base_changes_only_the_log_term() {
        let spec = ChannelSpec::new(0.1, 100.0, 0.3).unwrap();
        let mixed = spec.with_energy_base(EnergyBase::Mixed);
        let eta: f64 = 0.25;
        let diff = mixed.free_energy(eta).unwrap() - spec.free_energy(eta).unwrap();
        let expected = -0.5 * 0.3 * (eta.log2() - eta.ln());
        assert!((diff - expected).abs() < 1e-14);
    }

    #[test]
    fn empty_surface_grid_rejected() {
        assert!(mmse_surface(0.1, &[], &[10.0], EnergyBase::Nats).is_err());
        assert!(mmse_surface(0.1, &[0.2], &[], EnergyBase::Nats).is_err());
    }
}
