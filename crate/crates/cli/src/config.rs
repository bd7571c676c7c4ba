//! Flat `key = value` configuration files for experiment grids.
//!
//! ```text
//! # desk-scale comparison
//! p = 0.1
//! n = 5000
//! rates = 0.15:0.01:0.23
//! gammas_db = 10:5:70
//! trials = 20
//! seed = 1
//! ```
//!
//! Lists are comma separated; an item `start:step:end` expands to an
//! inclusive arithmetic range. Keys: `p`, `n`, `rates`, `gammas_db`,
//! `trials`, `seed`, `max_iters`, `tol`, `damping`, `variance`,
//! `normalize_rows`, `energy_base`.

use std::str::FromStr;

use tanaka_core::amp::EffectiveVariance;
use tanaka_core::tanaka::EnergyBase;

use crate::experiments::ExperimentConfig;
use crate::output::round12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

fn scalar<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse {v:?}"))
}

/// Parses `a,b,start:step:end,...`.
pub fn parse_list(v: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts[..] {
            [x] => out.push(scalar(x)?),
            [a, step, b] => {
                let (a, step, b): (f64, f64, f64) = (scalar(a)?, scalar(step)?, scalar(b)?);
                if step.is_nan() || step <= 0.0 || b < a {
                    return Err(format!("bad range {item:?}"));
                }
                let count = ((b - a) / step + 1e-9).floor() as usize + 1;
                out.extend((0..count).map(|i| round12(a + i as f64 * step)));
            }
            _ => return Err(format!("bad list item {item:?}")),
        }
    }
    Ok(out)
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("expected a boolean, got {v:?}")),
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ConfigError {
            line: i + 1,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err("expected key = value".into()))?;
        let (key, value) = (key.trim(), value.trim());
        let res: Result<(), String> = (|| {
            match key {
                "p" => cfg.p = scalar(value)?,
                "n" => cfg.n = scalar(value)?,
                "rates" => cfg.rates = parse_list(value)?,
                "gammas_db" => cfg.gammas_db = parse_list(value)?,
                "trials" => cfg.trials = scalar(value)?,
                "seed" => cfg.seed = scalar(value)?,
                "max_iters" => cfg.amp.max_iters = scalar(value)?,
                "tol" => cfg.amp.tol = scalar(value)?,
                "damping" => cfg.amp.damping = scalar(value)?,
                "variance" => {
                    cfg.amp.variance =
                        EffectiveVariance::from_str(value).map_err(|e| e.to_string())?
                }
                "normalize_rows" => cfg.normalize_rows = parse_bool(value)?,
                "energy_base" => {
                    cfg.energy_base = EnergyBase::from_str(value).map_err(|e| e.to_string())?
                }
                _ => return Err(format!("unknown key {key:?}")),
            }
            Ok(())
        })();
        res.map_err(err)?;
    }
    Ok(cfg)
}
