use tanaka_core::regions::{
    noise_sensitivity, rbp_vs_sparsity, robust_threshold, three_fp_band, thresholds, Region,
    RegionMap, RATE_TOL,
};
use tanaka_core::tanaka::{ChannelSpec, EnergyBase};
use tanaka_core::units::db_to_linear;

fn count(p: f64, gamma: f64, rate: f64) -> usize {
    ChannelSpec::new(p, gamma, rate)
        .unwrap()
        .fixed_points()
        .unwrap()
        .len()
}

/// Band edges from a plain scan over R in 1e-3 steps, each bracket refined
/// by bisection on the fixed-point count.
fn scanned_band(p: f64, gamma: f64) -> Option<(f64, f64)> {
    let rates: Vec<f64> = (1..=300)
        .map(|k| p + 1e-3 * k as f64)
        .filter(|&r| r < 0.4)
        .collect();
    let three: Vec<bool> = rates.iter().map(|&r| count(p, gamma, r) >= 3).collect();
    let first = three.iter().position(|&t| t)?;
    let last = three.iter().rposition(|&t| t)?;
    let refine = |mut inside: f64, mut outside: f64| {
        while (inside - outside).abs() > 1e-6 {
            let mid = 0.5 * (inside + outside);
            if count(p, gamma, mid) >= 3 {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        0.5 * (inside + outside)
    };
    Some((
        refine(rates[first], rates[first - 1]),
        refine(rates[last], rates[last + 1]),
    ))
}

#[test]
fn band_matches_rate_scan() {
    let gamma = 1e6;
    let band = three_fp_band(0.1, gamma).unwrap().expect("band at 60 dB");
    let (lo, hi) = scanned_band(0.1, gamma).unwrap();
    assert!((band.r_low - lo).abs() < 1e-4, "{} vs {lo}", band.r_low);
    assert!((band.r_high - hi).abs() < 1e-4, "{} vs {hi}", band.r_high);
    assert!((band.r_high - 0.21).abs() <= 0.01);
}

#[test]
fn band_absence() {
    assert!(three_fp_band(0.1, 1e3).unwrap().is_none());
    assert!(three_fp_band(1.0, 1e6).unwrap().is_none());
    assert!(scanned_band(0.1, 1e3).is_none());
}

#[test]
fn ordering_and_low_noise_trend() {
    let mut prev = f64::INFINITY;
    for db in [50.0, 55.0, 60.0, 65.0, 70.0] {
        let t = thresholds(0.1, db_to_linear(db), EnergyBase::Nats).unwrap();
        let (rc, rl, rbp) = (
            t.r_consistency.unwrap(),
            t.r_low_noise.unwrap(),
            t.r_bp.unwrap(),
        );
        assert!(t.r_robust <= rc && rc <= rl && rl <= rbp, "{db} dB: {t:?}");
        assert!(rl <= prev + RATE_TOL, "{db} dB: {rl} > {prev}");
        prev = rl;
    }
}

#[test]
fn low_noise_threshold_splits_selection() {
    let gamma = 1e6;
    let t = thresholds(0.1, gamma, EnergyBase::Nats).unwrap();
    let rl = t.r_low_noise.unwrap();
    let largest = |rate: f64| {
        let sol = ChannelSpec::new(0.1, gamma, rate).unwrap().solve().unwrap();
        sol.selected == sol.count() - 1
    };
    assert!(!largest(rl - 1e-3));
    assert!(largest(rl + 1e-3));
}

#[test]
fn band_edges_continuous_in_gamma() {
    for db in [40.0, 55.0, 70.0] {
        let g = db_to_linear(db);
        let a = three_fp_band(0.1, g).unwrap().unwrap();
        let b = three_fp_band(0.1, 1.01 * g).unwrap().unwrap();
        assert!((a.r_low - b.r_low).abs() < 1e-2 && (a.r_high - b.r_high).abs() < 1e-2);
    }
}

#[test]
fn classification_sweep_follows_thresholds() {
    let map = RegionMap::new(0.1, EnergyBase::Nats).unwrap();
    let gamma = 1e6;
    let t = thresholds(0.1, gamma, EnergyBase::Nats).unwrap();
    let (rc, rl, rbp) = (
        t.r_consistency.unwrap(),
        t.r_low_noise.unwrap(),
        t.r_bp.unwrap(),
    );
    let rank = |r: Region| match r {
        Region::Unrobust => 0,
        Region::Region4 => 1,
        Region::Region2 => 2,
        Region::Region3 => 3,
        Region::Region1 | Region::Region5 => 4,
    };
    let mut prev = 0;
    for k in 0..75 {
        let rate = 0.102 + 0.002 * k as f64;
        let near = [rc, rl, rbp]
            .iter()
            .any(|&b| (rate - b).abs() < 2.0 * RATE_TOL);
        if near {
            continue;
        }
        let label = map.classify(rate, gamma).unwrap();
        let want = if rate < rc {
            1
        } else if rate < rl {
            2
        } else if rate < rbp {
            3
        } else {
            4
        };
        assert_eq!(rank(label.region), want, "R={rate}: {label:?}");
        assert!(rank(label.region) >= prev);
        prev = rank(label.region);
    }
}

#[test]
fn reference_points() {
    let map = RegionMap::new(0.1, EnergyBase::Nats).unwrap();
    let sup = map.sup_rbp().unwrap();
    assert!(sup > 0.2 && sup < 0.23, "{sup}");
    let region = |rate: f64, gamma: f64| map.classify(rate, gamma).unwrap().region;
    assert_eq!(region(0.05, 1e6), Region::Unrobust);
    assert_eq!(region(0.1, 1e6), Region::Unrobust);
    assert_eq!(region(0.18, 1e3), Region::Region4);
    assert_eq!(region(0.17, 1e6), Region::Region3);
    assert_eq!(region(0.15, 1e5), Region::Region2);
    assert_eq!(region(0.25, 1e6), Region::Region1);
    assert_eq!(region(0.208, 1e7), Region::Region5);
}

#[test]
fn degenerate_point_takes_neighbour_label() {
    let map = RegionMap::new(0.1, EnergyBase::Nats).unwrap();
    let band = three_fp_band(0.1, 1e6).unwrap().unwrap();
    // Exactly on the BP edge the equation has a double root.
    let label = map.classify(band.r_high, 1e6).unwrap();
    assert!(matches!(
        label.region,
        Region::Region3 | Region::Region5 | Region::Region1
    ));
}

#[test]
fn rbp_sweep() {
    let rows = rbp_vs_sparsity(&[0.2, 0.05, 0.15, 0.1], 1e7).unwrap();
    let ps: Vec<f64> = rows.iter().map(|r| r.0).collect();
    assert_eq!(ps, vec![0.05, 0.1, 0.15, 0.2]);
    for (p, rbp) in &rows {
        assert!(rbp.unwrap() > *p);
    }
    assert!((rows[1].1.unwrap() - 0.21).abs() <= 0.01);
    for w in rows.windows(2) {
        assert!(w[1].1.unwrap() > w[0].1.unwrap());
    }
}

#[test]
fn robust_threshold_and_sensitivity() {
    assert_eq!(robust_threshold(0.1).unwrap(), 0.1);
    assert_eq!(robust_threshold(1.0).unwrap(), 1.0);
    assert!((noise_sensitivity(0.1, 0.2).unwrap() - 1.0).abs() < 1e-15);
    assert!(
        noise_sensitivity(0.1, 0.1).is_err() || noise_sensitivity(0.1, 0.1).unwrap().is_infinite()
    );
    // Exact mmse * gamma approaches the sensitivity at large gamma.
    let sol = ChannelSpec::new(0.1, 1e8, 0.2).unwrap().solve().unwrap();
    assert!((sol.selected().mmse * 1e8 - 1.0).abs() < 0.05);
}
