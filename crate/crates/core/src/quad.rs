//! Globally adaptive Gauss–Kronrod (G10/K21) quadrature on a finite interval.
//!
//! The interval is first split at caller-supplied breakpoints; the piece with
//! the largest error estimate is then bisected until the summed estimate meets
//! `max(abs_tol, rel_tol * |value|)`. Error estimates follow the QUADPACK
//! `qk21` heuristics, including the round-off floor.

#![allow(clippy::excessive_precision)]

use alloc::vec::Vec;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_226_081,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for XGK[1], XGK[3], .., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

const MAX_INTERVALS: usize = 4000;

/// Value of an integral together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = WGK[10] * fc;
    let mut resg = 0.0;
    let mut resabs = libm::fabs(resk);
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (libm::fabs(f1) + libm::fabs(f2));
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[10] * libm::fabs(fc - mean);
    for j in 0..10 {
        resasc += WGK[j] * (libm::fabs(fv1[j] - mean) + libm::fabs(fv2[j] - mean));
    }
    let value = resk * half;
    let resabs = resabs * libm::fabs(half);
    let resasc = resasc * libm::fabs(half);
    let mut err = libm::fabs((resk - resg) * half);
    if resasc != 0.0 && err != 0.0 {
        let scaled = libm::pow(200.0 * err / resasc, 1.5);
        err = resasc * if scaled < 1.0 { scaled } else { 1.0 };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let floor = 50.0 * f64::EPSILON * resabs;
        if floor > err {
            err = floor;
        }
    }
    Piece { a, b, value, err }
}

/// Integrates `f` over `[points[0], points[last]]`, with the initial
/// partition given by the sorted breakpoints.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Estimate> {
    if points.len() < 2 {
        return Err(Error::Domain("quadrature needs at least two breakpoints"));
    }
    let mut pieces: Vec<Piece> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| kronrod21(&f, w[0], w[1]))
        .collect();

    loop {
        let (value, err) = pieces
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.err));
        let target = abs_tol.max(rel_tol * libm::fabs(value));
        if !value.is_finite() || err.is_nan() {
            return Err(Error::Quadrature {
                requested: target,
                achieved: f64::INFINITY,
            });
        }
        if err <= target {
            return Ok(Estimate {
                value,
                abs_err: err,
            });
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature {
                requested: target,
                achieved: err,
            });
        }
        let (worst, _) =
            pieces
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(wi, we), (i, p)| {
                    if p.err > we {
                        (i, p.err)
                    } else {
                        (wi, we)
                    }
                });
        let Piece { a, b, .. } = pieces[worst];
        let mid = 0.5 * (a + b);
        if !(mid > a && mid < b) {
            // Interval can no longer be split in floating point.
            return Err(Error::Quadrature {
                requested: target,
                achieved: err,
            });
        }
        pieces[worst] = kronrod21(&f, a, mid);
        pieces.push(kronrod21(&f, mid, b));
    }
}

/// Breakpoints `0, h, 2h, 4h, ...` capped at `upper`; resolves integrands
/// living on several length scales.
pub fn geometric_breakpoints(first: f64, upper: f64) -> Vec<f64> {
    let mut pts = Vec::with_capacity(48);
    pts.push(0.0);
    let mut x = first;
    while x < upper {
        pts.push(x);
        x *= 2.0;
    }
    pts.push(upper);
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let est = integrate(|x| 3.0 * x * x - x + 2.0, &[0.0, 2.0], 1e-12, 0.0).unwrap();
        assert!((est.value - 10.0).abs() < 1e-13);
    }

    #[test]
    fn gaussian_with_far_domain() {
        let pts = geometric_breakpoints(0.5, 1e5);
        let est = integrate(
            |x| libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * core::f64::consts::PI),
            &pts,
            0.0,
            1e-13,
        )
        .unwrap();
        assert!((est.value - 0.5).abs() < 1e-13, "{}", est.value);
    }

    #[test]
    fn single_piece_misses_narrow_bump() {
        // A single piece over a huge domain never samples the bump; the
        // geometric partition is what makes it visible.
        let f = |x: f64| libm::exp(-0.5 * x * x);
        let naive = integrate(f, &[0.0, 1e5], 0.0, 1e-12).unwrap();
        assert!(naive.value < 1e-3);
        let pts = geometric_breakpoints(0.5, 1e5);
        let good = integrate(f, &pts, 0.0, 1e-12).unwrap();
        assert!((good.value - libm::sqrt(core::f64::consts::FRAC_PI_2)).abs() < 1e-12);
    }

    #[test]
    fn too_few_points_is_domain_error() {
        assert!(matches!(
            integrate(|x| x, &[1.0], 1e-9, 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn nonintegrable_reports_achieved_tolerance() {
        let r = integrate(|x| 1.0 / x, &[0.0, 1.0], 1e-12, 0.0);
        match r {
            Err(Error::Quadrature { achieved, .. }) => assert!(achieved > 1e-12),
            other => panic!("expected quadrature failure, got {other:?}"),
        }
    }
}
