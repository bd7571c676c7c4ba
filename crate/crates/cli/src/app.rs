//! Subcommands and exit-code mapping.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use tanaka_core::amp::{AmpConfig, EffectiveVariance};
use tanaka_core::regions::{rbp_vs_sparsity, thresholds, RegionMap};
use tanaka_core::tanaka::{ChannelSpec, EnergyBase};
use tanaka_core::units::db_to_linear;
use tanaka_core::SparseGaussianPrior;

use crate::config::{parse_config, parse_list};
use crate::experiments::{mean_and_std_err, run_cell, run_grid, ExperimentConfig};
use crate::output::{format_number, write_table, Format};
use crate::records::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<tanaka_core::Error> for CliError {
    fn from(e: tanaka_core::Error) -> Self {
        use tanaka_core::Error as E;
        match e {
            E::Domain(_) | E::Dimension { .. } => CliError::Usage(e.to_string()),
            E::Quadrature { .. } | E::Internal(_) => CliError::Numerical(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "tanaka",
    version,
    about = "MMSE, fixed points and AMP experiments for noisy compressed sensing"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BaseArg {
    Nats,
    Mixed,
}

impl From<BaseArg> for EnergyBase {
    fn from(b: BaseArg) -> Self {
        match b {
            BaseArg::Nats => EnergyBase::Nats,
            BaseArg::Mixed => EnergyBase::Mixed,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VarianceArg {
    Residual,
    Predicted,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Logarithm used in the free-energy penalty term.
    #[arg(long, value_enum, default_value = "nats")]
    energy_base: BaseArg,
}

#[derive(Debug, Args)]
struct AmpArgs {
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    #[arg(long, value_enum, default_value = "residual")]
    variance: VarianceArg,
    /// Rescale measurement rows to exactly unit norm.
    #[arg(long)]
    normalize_rows: bool,
}

impl AmpArgs {
    fn config(&self) -> Result<AmpConfig> {
        let variance = match self.variance {
            VarianceArg::Residual => EffectiveVariance::Residual,
            VarianceArg::Predicted => EffectiveVariance::Predicted,
        };
        Ok(AmpConfig::new(self.max_iters, self.tol, self.damping)?.with_variance(variance))
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Scalar-channel MMSE of the sparse Gaussian prior.
    Mmse {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        snr_eff: f64,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// All fixed points at one (p, gamma, R) with the selected one marked.
    FixedPoints {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        gamma_db: f64,
        #[arg(long)]
        rate: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Selected MMSE over a rate x gamma grid.
    Surface {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        rate_min: f64,
        #[arg(long)]
        rate_max: f64,
        #[arg(long)]
        rate_steps: usize,
        #[arg(long)]
        gamma_db_min: f64,
        #[arg(long)]
        gamma_db_max: f64,
        #[arg(long)]
        gamma_db_steps: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Robust, consistency, low-noise and BP thresholds.
    Thresholds {
        #[arg(long)]
        p: f64,
        /// One value or a comma-separated list.
        #[arg(long, value_delimiter = ',', required = true)]
        gamma_db: Vec<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// BP threshold against sparsity at a reference gamma.
    RbpSweep {
        /// Comma-separated list; `start:step:end` ranges allowed.
        #[arg(long)]
        p_list: String,
        #[arg(long, default_value_t = 70.0)]
        gamma_db_ref: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// AMP trials at one (R, gamma) cell.
    Simulate {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        gamma_db: f64,
        #[arg(long, default_value_t = 5000)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        amp: AmpArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// AMP against the fixed-point predictions over a configured grid.
    Compare {
        #[arg(long)]
        config_file: PathBuf,
        /// Overrides the seed of the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: serde::Serialize>(output: &OutputArgs, headers: &[&str], records: &[T]) -> Result<()> {
    let base: EnergyBase = output.energy_base.into();
    let comments = [("energy_base", base.as_str().to_owned())];
    write_table(
        sink(&output.out)?,
        output.format,
        headers,
        &comments,
        records,
    )?;
    Ok(())
}

fn linspace(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 || hi < lo || !lo.is_finite() || !hi.is_finite() {
        return Err(CliError::Usage(
            "grid needs steps >= 1 and min <= max".into(),
        ));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect())
}

fn cmd_mmse(p: f64, snr: f64, format: Format) -> Result<()> {
    let mmse = SparseGaussianPrior::new(p)?.scalar_mmse(snr)?;
    let mut out = io::stdout().lock();
    match format {
        Format::Csv => writeln!(out, "{}", format_number(mmse))?,
        Format::Json => writeln!(
            out,
            "[{{\"p\": {}, \"snr_eff\": {}, \"mmse\": {}}}]",
            format_number(p),
            format_number(snr),
            format_number(mmse)
        )?,
    }
    Ok(())
}

fn cmd_fixed_points(p: f64, gamma_db: f64, rate: f64, output: &OutputArgs) -> Result<()> {
    let spec = ChannelSpec::new(p, db_to_linear(gamma_db), rate)?
        .with_energy_base(output.energy_base.into());
    let sol = spec.solve()?;
    let rows: Vec<FixedPointRecord> = sol
        .all
        .iter()
        .enumerate()
        .map(|(i, fp)| {
            FixedPointRecord::new(
                fp.eta,
                fp.a,
                fp.mmse,
                fp.free_energy,
                fp.branch.as_str(),
                i == sol.selected,
            )
        })
        .collect();
    emit(output, FIXED_POINT_HEADERS, &rows)
}

fn cmd_surface(p: f64, rates: Vec<f64>, gammas_db: Vec<f64>, output: &OutputArgs) -> Result<()> {
    let base: EnergyBase = output.energy_base.into();
    let map = RegionMap::new(p, base)?;
    let cells: Vec<(f64, f64)> = rates
        .iter()
        .flat_map(|&r| gammas_db.iter().map(move |&g| (r, g)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(rate, gamma_db)| -> Result<SurfaceRecord> {
            let gamma = db_to_linear(gamma_db);
            let sol = ChannelSpec::new(p, gamma, rate)?
                .with_energy_base(base)
                .solve()?;
            let label = map.classify_solved(rate, gamma, &sol)?;
            let fp = sol.selected();
            Ok(SurfaceRecord::new(
                rate,
                gamma_db,
                fp.mmse,
                fp.eta,
                sol.count(),
                label.region.as_str(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    emit(output, SURFACE_HEADERS, &rows)
}

fn cmd_thresholds(p: f64, gammas_db: &[f64], output: &OutputArgs) -> Result<()> {
    let base: EnergyBase = output.energy_base.into();
    let rows = gammas_db
        .par_iter()
        .map(|&db| -> Result<ThresholdRecord> {
            let t = thresholds(p, db_to_linear(db), base)?;
            Ok(ThresholdRecord::new(
                db,
                t.r_robust,
                t.r_consistency,
                t.r_low_noise,
                t.r_bp,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    emit(output, THRESHOLD_HEADERS, &rows)
}

fn cmd_rbp_sweep(p_list: &str, gamma_db_ref: f64, output: &OutputArgs) -> Result<()> {
    let ps = parse_list(p_list).map_err(CliError::Usage)?;
    if ps.is_empty() {
        return Err(CliError::Usage("empty sparsity list".into()));
    }
    let rows: Vec<RbpRecord> = rbp_vs_sparsity(&ps, db_to_linear(gamma_db_ref))?
        .into_iter()
        .map(|(p, r)| RbpRecord::new(p, r))
        .collect();
    emit(output, RBP_HEADERS, &rows)
}

fn cmd_simulate(cfg: ExperimentConfig, output: &OutputArgs) -> Result<()> {
    cfg.validate()?;
    let trials = run_cell(&cfg, 0, 0)?;
    let mses: Vec<f64> = trials.iter().map(|t| t.empirical_mse).collect();
    let (mean, se) = mean_and_std_err(&mses);
    let mut rows: Vec<SimulateRecord> = trials
        .iter()
        .enumerate()
        .map(|(i, t)| {
            SimulateRecord::new(
                i.to_string(),
                t.empirical_mse,
                None,
                t.iterations,
                t.converged,
            )
        })
        .collect();
    rows.push(SimulateRecord::new(
        "summary".into(),
        mean,
        Some(se),
        trials.iter().map(|t| t.iterations).sum(),
        trials.iter().all(|t| t.converged),
    ));
    emit(output, SIMULATE_HEADERS, &rows)
}

fn cmd_compare(
    config_file: &PathBuf,
    seed: Option<u64>,
    format: Format,
    out: &Option<PathBuf>,
) -> Result<()> {
    let text = std::fs::read_to_string(config_file)
        .map_err(|e| CliError::Usage(format!("{}: {e}", config_file.display())))?;
    let mut cfg = parse_config(&text).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let rows: Vec<ComparisonRecord> = run_grid(&cfg)?.iter().map(ComparisonRecord::from).collect();
    let comments = [("energy_base", cfg.energy_base.as_str().to_owned())];
    write_table(sink(out)?, format, COMPARISON_HEADERS, &comments, &rows)?;
    Ok(())
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Mmse { p, snr_eff, format } => cmd_mmse(p, snr_eff, format),
        Command::FixedPoints {
            p,
            gamma_db,
            rate,
            output,
        } => cmd_fixed_points(p, gamma_db, rate, &output),
        Command::Surface {
            p,
            rate_min,
            rate_max,
            rate_steps,
            gamma_db_min,
            gamma_db_max,
            gamma_db_steps,
            output,
        } => {
            let rates = linspace(rate_min, rate_max, rate_steps)?;
            let gammas = linspace(gamma_db_min, gamma_db_max, gamma_db_steps)?;
            cmd_surface(p, rates, gammas, &output)
        }
        Command::Thresholds {
            p,
            gamma_db,
            output,
        } => cmd_thresholds(p, &gamma_db, &output),
        Command::RbpSweep {
            p_list,
            gamma_db_ref,
            output,
        } => cmd_rbp_sweep(&p_list, gamma_db_ref, &output),
        Command::Simulate {
            p,
            rate,
            gamma_db,
            n,
            trials,
            seed,
            amp,
            output,
        } => {
            let cfg = ExperimentConfig {
                p,
                n,
                rates: vec![rate],
                gammas_db: vec![gamma_db],
                trials,
                seed,
                amp: amp.config()?,
                normalize_rows: amp.normalize_rows,
                energy_base: output.energy_base.into(),
            };
            cmd_simulate(cfg, &output)
        }
        Command::Compare {
            config_file,
            seed,
            format,
            out,
        } => cmd_compare(&config_file, seed, format, &out),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
