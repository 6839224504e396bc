//! Sweeps over `(n, ρ, seed)` grids, summaries and CSV / JSON output.

mod config;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{csv_io, Error, Result};
use crate::risk::{GapExperiment, RiskGapResult};
use crate::rng::derive_seed;

pub use config::{
    DistributionSpec, EvaluationMode, ExperimentConfig, HypothesisSpec, LossSpec, NoiseSpec, OutputSpec, SweepSpec,
};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "ILNLAB_WORKERS";

pub const CSV_COLUMNS: [&str; 21] = [
    "run_id",
    "seed",
    "n",
    "rho",
    "dist_kind",
    "noise_family",
    "loss",
    "space",
    "C",
    "g_delta",
    "bound_lemma2",
    "bound_theorem1",
    "bound_corollary1",
    "clean_risk_clean_erm",
    "clean_risk_noisy_erm",
    "gap",
    "gap01",
    "eval_ci",
    "solver_tol",
    "wall_ms",
    "error",
];

/// `%.9g`-style formatting: 9 significant digits, trailing zeros dropped.
pub fn fmt_float(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "NaN".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One grid cell: either a result or the error that aborted it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub run_id: String,
    pub n: usize,
    pub rho: f64,
    pub seed: u64,
    pub result: Option<RiskGapResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    pub rho: f64,
    pub runs: usize,
    pub errors: usize,
    pub median_gap: Option<f64>,
    pub median_gap01: Option<f64>,
    /// Among successful runs.
    pub frac_within_theorem1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResults {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<CellSummary>,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    Some(if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    })
}

impl SweepResults {
    pub fn from_rows(rows: Vec<SweepRow>) -> Self {
        let mut keys: Vec<(usize, f64)> = Vec::new();
        for r in &rows {
            if !keys.iter().any(|k| k.0 == r.n && k.1 == r.rho) {
                keys.push((r.n, r.rho));
            }
        }
        let summary = keys
            .into_iter()
            .map(|(n, rho)| {
                let cell: Vec<&SweepRow> = rows.iter().filter(|r| r.n == n && r.rho == rho).collect();
                let ok: Vec<&RiskGapResult> = cell.iter().filter_map(|r| r.result.as_ref()).collect();
                let within = ok.iter().filter(|r| r.gap <= r.bound_theorem1).count();
                CellSummary {
                    n,
                    rho,
                    runs: cell.len(),
                    errors: cell.len() - ok.len(),
                    median_gap: median(ok.iter().map(|r| r.gap).collect()),
                    median_gap01: median(ok.iter().map(|r| r.gap01).collect()),
                    frac_within_theorem1: (!ok.is_empty()).then(|| within as f64 / ok.len() as f64),
                }
            })
            .collect();
        SweepResults { rows, summary }
    }
}

/// Worker count from `ILNLAB_WORKERS`, else the number of CPUs.
pub fn worker_count() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(k),
            _ => Err(Error::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |k| k.get())),
    }
}

/// Seed of the training sample for one swept seed. It ignores `n` and `ρ`,
/// so cells that differ only in those share their clean data.
pub fn cell_seed(master_seed: u64, seed: u64) -> u64 {
    derive_seed(master_seed, seed)
}

fn run_cell(cfg: &ExperimentConfig, n: usize, rho: f64, seed: u64) -> Result<RiskGapResult> {
    let dist = cfg.distribution(rho)?;
    let noise = cfg.noise(rho)?;
    let space = cfg.space()?;
    let data_seed = cell_seed(cfg.sweep.master_seed, seed);
    let mut r = GapExperiment {
        dist: &dist,
        noise: &noise,
        space: &space,
        loss: cfg.loss.kind,
        solver: cfg.solver,
        n,
        delta: cfg.sweep.delta,
        seed: data_seed,
        evaluation: cfg.evaluation(&dist),
        eval_seed: data_seed,
    }
    .run()?;
    r.seed = seed;
    if !cfg.output.timing {
        r.wall_ms = 0.0;
    }
    Ok(r)
}

/// Runs every `(n, ρ, seed)` cell with the configured worker count.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResults> {
    run_sweep_with_workers(cfg, worker_count()?)
}

/// Rows come back in grid order (`n`, then `ρ`, then seed) whatever the
/// worker count; a failing cell becomes an error row.
pub fn run_sweep_with_workers(cfg: &ExperimentConfig, workers: usize) -> Result<SweepResults> {
    cfg.validate()?;
    let s = &cfg.sweep;
    let mut cells = Vec::with_capacity(s.n.len() * s.rho.len() * s.seeds.len());
    for &n in &s.n {
        for &rho in &s.rho {
            for &seed in &s.seeds {
                cells.push((n, rho, seed));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(n, rho, seed)| {
                let run_id = format!("n{n}_rho{}_s{seed}", fmt_float(rho));
                match run_cell(cfg, n, rho, seed) {
                    Ok(mut r) => {
                        r.run_id = run_id.clone();
                        SweepRow {
                            run_id,
                            n,
                            rho,
                            seed,
                            result: Some(r),
                            error: None,
                        }
                    }
                    Err(e) => SweepRow {
                        run_id,
                        n,
                        rho,
                        seed,
                        result: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    });
    Ok(SweepResults::from_rows(rows))
}

fn csv_record(row: &SweepRow, cfg_names: &[String; 4]) -> Vec<String> {
    let f = |v: f64| fmt_float(v);
    match &row.result {
        Some(r) => vec![
            r.run_id.clone(),
            r.seed.to_string(),
            r.n.to_string(),
            f(r.rho),
            r.dist_kind.clone(),
            r.noise_family.clone(),
            r.loss.clone(),
            r.space.clone(),
            f(r.c),
            f(r.g_delta),
            f(r.bound_lemma2),
            f(r.bound_theorem1),
            f(r.bound_corollary1),
            f(r.clean_risk_clean_erm),
            f(r.clean_risk_noisy_erm),
            f(r.gap),
            f(r.gap01),
            f(r.eval_ci),
            f(r.solver_tol),
            f(r.wall_ms),
            String::new(),
        ],
        None => {
            let mut rec = vec![row.run_id.clone(), row.seed.to_string(), row.n.to_string(), f(row.rho)];
            rec.extend(cfg_names.iter().cloned());
            rec.extend(std::iter::repeat_n(String::new(), 12));
            rec.push(row.error.clone().unwrap_or_default());
            rec
        }
    }
}

/// Writes the header and one row per cell.
pub fn emit_csv(results: &SweepResults, path: &Path) -> Result<()> {
    emit_csv_named(results, path, &Default::default())
}

/// As [`emit_csv`]; `names` fills the descriptive columns of error rows
/// (`dist_kind`, `noise_family`, `loss`, `space`).
pub fn emit_csv_named(results: &SweepResults, path: &Path, names: &[String; 4]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(e, path))?;
    w.write_record(CSV_COLUMNS).map_err(|e| csv_io(e, path))?;
    for row in &results.rows {
        w.write_record(csv_record(row, names)).map_err(|e| csv_io(e, path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Descriptive column values for error rows of a sweep over `cfg`.
pub fn config_names(cfg: &ExperimentConfig) -> [String; 4] {
    let dist = match &cfg.distribution {
        DistributionSpec::Synthetic(_) => "synthetic",
        DistributionSpec::Finite(_) | DistributionSpec::Construction { .. } => "finite",
    };
    let noise = match &cfg.distribution {
        DistributionSpec::Construction { .. } => "iln",
        _ => cfg.noise.family.name(),
    };
    let space = match &cfg.hypothesis {
        HypothesisSpec::LinearBall { .. } => "linear_ball",
        HypothesisSpec::RkhsBall { .. } => "rkhs_ball",
        HypothesisSpec::FiniteSign => "finite_sign",
    };
    [dist.into(), noise.into(), cfg.loss.kind.name().into(), space.into()]
}

/// One parsed CSV row; numeric cells of error rows are `None`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CsvRow {
    pub run_id: String,
    pub seed: u64,
    pub n: usize,
    pub rho: f64,
    pub dist_kind: String,
    pub noise_family: String,
    pub loss: String,
    pub space: String,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub g_delta: Option<f64>,
    pub bound_lemma2: Option<f64>,
    pub bound_theorem1: Option<f64>,
    pub bound_corollary1: Option<f64>,
    pub clean_risk_clean_erm: Option<f64>,
    pub clean_risk_noisy_erm: Option<f64>,
    pub gap: Option<f64>,
    pub gap01: Option<f64>,
    pub eval_ci: Option<f64>,
    pub solver_tol: Option<f64>,
    pub wall_ms: Option<f64>,
    pub error: String,
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_io(e, path))?;
    let header: Vec<String> = r.headers().map_err(|e| csv_io(e, path))?.iter().map(String::from).collect();
    if header != CSV_COLUMNS {
        return Err(Error::Parse(format!("{}: unexpected header {header:?}", path.display())));
    }
    r.deserialize().map(|row| row.map_err(|e| csv_io(e, path))).collect()
}

pub fn write_json(results: &SweepResults, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(results)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
