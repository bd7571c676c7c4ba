#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tanaka_core::amp::Matrix;

pub fn normal_pdf(x: f64, var: f64) -> f64 {
    (-0.5 * x * x / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

pub struct Instance {
    pub x: Vec<f64>,
    pub phi: Matrix,
    pub y: Vec<f64>,
}

/// `y = sqrt(gamma) Phi x + z` with `Phi_ij ~ N(0, 1/n)`.
pub fn instance(p: f64, n: usize, rate: f64, gamma: f64, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = (rate * n as f64).round() as usize;
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
    let phi = Matrix::from_row_major(m, n, data).unwrap();
    let mut y = vec![0.0; m];
    phi.mul_vec_into(&x, gamma.sqrt(), &mut y);
    for v in &mut y {
        *v += rng.sample::<f64, _>(StandardNormal);
    }
    Instance { x, phi, y }
}

pub fn mean_and_std_err(v: &[f64]) -> (f64, f64) {
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}
