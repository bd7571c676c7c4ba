//! Thresholds and performance regions in the `(R, gamma)` plane.
//!
//! Substituting `s = eta * gamma * R` turns the fixed-point equation into
//! `R = h(s) = s * (1/gamma + mmse(p, s))`. Every root `s > 0` of that
//! equation is a fixed point with `eta = s / (gamma R)` automatically in
//! `(0, 1]`, so the number of fixed points at rate `R` is the number of
//! crossings of the level `R` with the curve `h`. When `h` has a local maximum
//! followed by a local minimum, three fixed points coexist exactly for `R`
//! strictly between the two extreme values: the minimum is the consistency
//! threshold and the maximum the BP threshold.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::prior::SparseGaussianPrior;
use crate::tanaka::{Branch, ChannelSpec, EnergyBase, Solution};
use crate::units::db_to_linear;

const SCAN_POINTS_PER_DECADE: f64 = 60.0;
const SCAN_MIN_SNR: f64 = 1e-4;

/// `(snr, rate)` at a stationary point of the rate curve.
pub type Extremum = (f64, f64);

/// Target width of the bisection on the selected-branch predicate.
pub const RATE_TOL: f64 = 1e-5;
const DEGENERATE_NUDGE: f64 = 1e-4;

/// Reference grid used to separate Regions 1, 4 and 5: 10 to 80 dB in 1 dB
/// steps.
pub fn reference_gammas_db() -> Vec<f64> {
    (10..=80).map(|d| d as f64).collect()
}

/// `R_r`, `R_c(gamma)`, `R_l(gamma)`, `R_bp(gamma)` at one `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSet {
    pub gamma: f64,
    pub r_robust: f64,
    pub r_consistency: Option<f64>,
    pub r_low_noise: Option<f64>,
    pub r_bp: Option<f64>,
}

/// Rate interval in which three fixed points coexist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    /// Consistency threshold.
    pub r_low: f64,
    /// BP threshold.
    pub r_high: f64,
    /// Scalar SNR at the local maximum of `h`; roots below it belong to the
    /// smallest branch.
    pub snr_at_max: f64,
    /// Scalar SNR at the local minimum of `h`; roots above it belong to the
    /// largest branch.
    pub snr_at_min: f64,
}

impl Band {
    pub fn contains(&self, rate: f64) -> bool {
        rate > self.r_low && rate < self.r_high
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Region {
    Unrobust,
    Region1,
    Region2,
    Region3,
    Region4,
    Region5,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Unrobust => "unrobust",
            Region::Region1 => "region1",
            Region::Region2 => "region2",
            Region::Region3 => "region3",
            Region::Region4 => "region4",
            Region::Region5 => "region5",
        }
    }
}

impl core::str::FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "unrobust" => Region::Unrobust,
            "region1" => Region::Region1,
            "region2" => Region::Region2,
            "region3" => Region::Region3,
            "region4" => Region::Region4,
            "region5" => Region::Region5,
            _ => return Err(Error::Domain("unknown region label")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionLabel {
    pub region: Region,
    pub fixed_point_count: usize,
    pub selected_branch: Branch,
    /// The queried point sat on a boundary with two fixed points; the label
    /// is that of a neighbouring interior point.
    pub degenerate: bool,
}

/// The curve `h(s) = s (1/gamma + mmse(p, s))`.
#[derive(Debug, Clone, Copy)]
pub struct RateCurve {
    prior: SparseGaussianPrior,
    gamma: f64,
}

impl RateCurve {
    pub fn new(p: f64, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Domain("gamma must be positive and finite"));
        }
        Ok(Self {
            prior: SparseGaussianPrior::new(p)?,
            gamma,
        })
    }

    pub fn rate_at(&self, s: f64) -> Result<f64> {
        Ok(s * (1.0 / self.gamma + self.prior.scalar_mmse(s)?))
    }

    /// Golden-section search for an extremum of `h` over `[lo, hi]` in
    /// `ln s`. `sign = 1` maximizes, `-1` minimizes.
    fn refine(&self, lo: f64, hi: f64, sign: f64) -> Result<(f64, f64)> {
        let inv_phi = 0.5 * (libm::sqrt(5.0) - 1.0);
        let (mut a, mut b) = (libm::log(lo), libm::log(hi));
        let f = |t: f64| -> Result<f64> { Ok(sign * self.rate_at(libm::exp(t))?) };
        let mut x1 = b - inv_phi * (b - a);
        let mut x2 = a + inv_phi * (b - a);
        let (mut f1, mut f2) = (f(x1)?, f(x2)?);
        for _ in 0..100 {
            if b - a < 1e-12 {
                break;
            }
            if f1 > f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = f(x1)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = f(x2)?;
            }
        }
        let (t, v) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
        Ok((libm::exp(t), sign * v))
    }

    /// Local maximum followed by local minimum of `h`, if any.
    pub fn extrema(&self) -> Result<Option<(Extremum, Extremum)>> {
        let upper = (10.0 * self.gamma).max(1e4);
        let decades = libm::log10(upper / SCAN_MIN_SNR);
        let n = libm::ceil(decades * SCAN_POINTS_PER_DECADE) as usize;
        let step = decades / n as f64;
        let s_at = |i: usize| SCAN_MIN_SNR * libm::pow(10.0, i as f64 * step);
        let mut h = Vec::with_capacity(n + 1);
        for i in 0..=n {
            h.push(self.rate_at(s_at(i))?);
        }
        let Some(imax) = (1..n).find(|&i| h[i] >= h[i - 1] && h[i] > h[i + 1]) else {
            return Ok(None);
        };
        let Some(imin) = (imax + 1..n).find(|&i| h[i] <= h[i - 1] && h[i] < h[i + 1]) else {
            return Ok(None);
        };
        let max = self.refine(s_at(imax - 1), s_at(imax + 1), 1.0)?;
        let min = self.refine(s_at(imin - 1), s_at(imin + 1), -1.0)?;
        Ok(Some((max, min)))
    }

    /// The three-fixed-point band restricted to `(p, 1)`.
    pub fn band(&self) -> Result<Option<Band>> {
        let Some(((s_max, h_max), (s_min, h_min))) = self.extrema()? else {
            return Ok(None);
        };
        let r_low = h_min.max(self.prior.p());
        let r_high = h_max.min(1.0);
        if r_high <= r_low {
            return Ok(None);
        }
        Ok(Some(Band {
            r_low,
            r_high,
            snr_at_max: s_max,
            snr_at_min: s_min,
        }))
    }
}

/// `R_r = p`: below it the noise sensitivity is unbounded.
pub fn robust_threshold(p: f64) -> Result<f64> {
    SparseGaussianPrior::new(p).map(|pr| pr.p())
}

/// Low-noise sensitivity `mmse / (1/gamma) -> p / (R - p)` for `R > p`.
pub fn noise_sensitivity(p: f64, rate: f64) -> Result<f64> {
    if rate.is_nan() || rate <= p {
        return Err(Error::Domain("noise sensitivity is unbounded for R <= p"));
    }
    Ok(p / (rate - p))
}

/// `(R_c(gamma), R_bp(gamma))`, or `None` when at most one fixed point
/// exists for every rate in `(p, 1)`.
pub fn three_fp_band(p: f64, gamma: f64) -> Result<Option<Band>> {
    RateCurve::new(p, gamma)?.band()
}

fn largest_wins(sol: &Solution, band: &Band, rate: f64) -> bool {
    if sol.count() == 1 {
        // The band edge is so close that two roots merged on the grid; the
        // survivor's side of the rate curve tells which branch it is.
        return sol.selected().a * rate > band.snr_at_max;
    }
    sol.selected().branch == Branch::Largest
}

/// `R_l(gamma)`: the rate inside the band where the free-energy minimizer
/// moves from the smallest to the largest fixed point.
pub fn low_noise_threshold(p: f64, gamma: f64, base: EnergyBase) -> Result<Option<f64>> {
    match three_fp_band(p, gamma)? {
        Some(band) => low_noise_threshold_in(p, gamma, base, &band).map(Some),
        None => Ok(None),
    }
}

fn low_noise_threshold_in(p: f64, gamma: f64, base: EnergyBase, band: &Band) -> Result<f64> {
    let wins = |rate: f64| -> Result<bool> {
        let sol = ChannelSpec::new(p, gamma, rate)?
            .with_energy_base(base)
            .solve()?;
        Ok(largest_wins(&sol, band, rate))
    };
    let inset = 0.25 * RATE_TOL;
    let (mut lo, mut hi) = (band.r_low + inset, band.r_high - inset);
    if wins(lo)? {
        return Ok(band.r_low);
    }
    if !wins(hi)? {
        return Ok(band.r_high);
    }
    while hi - lo > RATE_TOL {
        let mid = 0.5 * (lo + hi);
        if wins(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn thresholds(p: f64, gamma: f64, base: EnergyBase) -> Result<ThresholdSet> {
    let r_robust = robust_threshold(p)?;
    let band = three_fp_band(p, gamma)?;
    let r_low_noise = match &band {
        Some(b) => Some(low_noise_threshold_in(p, gamma, base, b)?),
        None => None,
    };
    Ok(ThresholdSet {
        gamma,
        r_robust,
        r_consistency: band.map(|b| b.r_low),
        r_low_noise,
        r_bp: band.map(|b| b.r_high),
    })
}

/// `R_bp(gamma_ref)` for each sparsity rate, sorted by `p`.
pub fn rbp_vs_sparsity(ps: &[f64], gamma_ref: f64) -> Result<Vec<(f64, Option<f64>)>> {
    let mut rows = Vec::with_capacity(ps.len());
    for &p in ps {
        rows.push((p, three_fp_band(p, gamma_ref)?.map(|b| b.r_high)));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(rows)
}

/// Region classifier for one sparsity rate, holding the bands over the
/// reference gamma grid. Read-only after construction.
#[derive(Debug, Clone)]
pub struct RegionMap {
    p: f64,
    base: EnergyBase,
    reference: Vec<(f64, Option<Band>)>,
    sup_rbp: Option<f64>,
    /// Reference gamma attaining `sup_rbp`, where the band emerges.
    cusp_gamma: Option<f64>,
    inf_rbp: Option<f64>,
}

impl RegionMap {
    pub fn new(p: f64, base: EnergyBase) -> Result<Self> {
        Self::with_reference(p, base, &reference_gammas_db())
    }

    pub fn with_reference(p: f64, base: EnergyBase, gammas_db: &[f64]) -> Result<Self> {
        SparseGaussianPrior::new(p)?;
        let mut reference = Vec::with_capacity(gammas_db.len());
        for &db in gammas_db {
            let gamma = db_to_linear(db);
            reference.push((gamma, three_fp_band(p, gamma)?));
        }
        let edges = || {
            reference
                .iter()
                .filter_map(|(g, b)| b.map(|b| (*g, b.r_high)))
        };
        let cusp = edges().fold(None, |acc: Option<(f64, f64)>, (g, r)| match acc {
            Some((_, best)) if best >= r => acc,
            _ => Some((g, r)),
        });
        let inf_rbp = edges().map(|(_, r)| r).reduce(f64::min);
        Ok(Self {
            p,
            base,
            sup_rbp: cusp.map(|c| c.1),
            cusp_gamma: cusp.map(|c| c.0),
            inf_rbp,
            reference,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Supremum of `R_bp(gamma)` over the reference grid.
    pub fn sup_rbp(&self) -> Option<f64> {
        self.sup_rbp
    }

    pub fn reference(&self) -> &[(f64, Option<Band>)] {
        &self.reference
    }

    /// Range of reference `gamma` whose band contains `rate`.
    pub fn band_gamma_interval(&self, rate: f64) -> Option<(f64, f64)> {
        let mut inside = self
            .reference
            .iter()
            .filter(|(_, b)| b.is_some_and(|b| b.contains(rate)))
            .map(|(g, _)| *g);
        let first = inside.next()?;
        Some(inside.fold((first, first), |(lo, hi), g| (lo.min(g), hi.max(g))))
    }

    pub fn classify(&self, rate: f64, gamma: f64) -> Result<RegionLabel> {
        let sol = ChannelSpec::new(self.p, gamma, rate)?
            .with_energy_base(self.base)
            .solve()?;
        self.classify_solved(rate, gamma, &sol)
    }

    /// Classification when the caller already holds the solution at
    /// `(rate, gamma)`.
    pub fn classify_solved(&self, rate: f64, gamma: f64, sol: &Solution) -> Result<RegionLabel> {
        let count = sol.count();
        let selected_branch = sol.selected().branch;
        let label = |region| RegionLabel {
            region,
            fixed_point_count: count,
            selected_branch,
            degenerate: false,
        };
        if rate <= self.p {
            return Ok(label(Region::Unrobust));
        }
        match count {
            3 => Ok(label(match selected_branch {
                Branch::Largest => Region::Region3,
                _ => Region::Region2,
            })),
            1 => Ok(label(self.single_fixed_point_region(rate, gamma))),
            _ => {
                for r in [rate + DEGENERATE_NUDGE, rate - DEGENERATE_NUDGE] {
                    if r <= 0.0 || r >= 1.0 {
                        continue;
                    }
                    let near = self.classify(r, gamma)?;
                    if near.fixed_point_count != 2 {
                        return Ok(RegionLabel {
                            degenerate: true,
                            ..near
                        });
                    }
                }
                Ok(RegionLabel {
                    degenerate: true,
                    ..label(Region::Region2)
                })
            }
        }
    }

    fn single_fixed_point_region(&self, rate: f64, gamma: f64) -> Region {
        if self.sup_rbp.is_none_or(|sup| rate >= sup) {
            return Region::Region1;
        }
        match self.band_gamma_interval(rate) {
            // Between the sampled bands and the supremum: the rate only meets
            // the band near its cusp, which splits low from high gamma.
            None if self.inf_rbp.is_some_and(|inf| rate >= inf) => match self.cusp_gamma {
                Some(cusp) if gamma > cusp => Region::Region5,
                _ => Region::Region4,
            },
            None => Region::Region4,
            Some((lo, _)) if gamma < lo => Region::Region4,
            Some((_, hi)) if gamma > hi => Region::Region5,
            Some((lo, hi)) => {
                // Inside the interval but off the grid's band: nearest edge.
                let (d_lo, d_hi) = (libm::log(gamma / lo), libm::log(hi / gamma));
                if d_lo <= d_hi {
                    Region::Region4
                } else {
                    Region::Region5
                }
            }
        }
    }
}

/// One-shot classification; builds a [`RegionMap`] for `p`.
pub fn classify(p: f64, rate: f64, gamma: f64, base: EnergyBase) -> Result<RegionLabel> {
    RegionMap::new(p, base)?.classify(rate, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn robust_threshold_is_sparsity() {
        assert_eq!(robust_threshold(0.1).unwrap(), 0.1);
        assert_eq!(robust_threshold(1.0).unwrap(), 1.0);
        assert!(robust_threshold(0.0).is_err());
    }

    #[test]
    fn noise_sensitivity_law() {
        assert!((noise_sensitivity(0.1, 0.2).unwrap() - 1.0).abs() < 1e-15);
        assert!(noise_sensitivity(0.1, 0.1).is_err());
    }

    #[test]
    fn gaussian_prior_has_no_band() {
        for gamma in [1.0, 1e3, 1e7] {
            assert!(three_fp_band(1.0, gamma).unwrap().is_none());
        }
    }

    #[test]
    fn low_snr_has_no_band() {
        assert!(three_fp_band(0.1, 1e3).unwrap().is_none());
    }

    #[test]
    fn region_labels_parse() {
        for r in [
            Region::Unrobust,
            Region::Region1,
            Region::Region2,
            Region::Region3,
            Region::Region4,
            Region::Region5,
        ] {
            assert_eq!(r.as_str().parse::<Region>().unwrap(), r);
        }
    }
}
