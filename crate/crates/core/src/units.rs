//! Decibel conversions. `gamma_db = 10 log10(gamma)`, the power convention.

pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

pub fn linear_to_db(gamma: f64) -> f64 {
    10.0 * libm::log10(gamma)
}

/// Nats to bits, for reporting only.
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / core::f64::consts::LN_2
}
