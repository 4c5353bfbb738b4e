//! Per-iteration timing of the solvers on Hilbert cubes of growing size,
//! with least-squares log-log slope estimates.
//!
//! Configurations run one after another in this process. Timings taken
//! concurrently would contend for the same cores and distort the slopes.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use clap::ValueEnum;
use nnta::data::hilbert_tensor;
use nnta::nlrt::nlrt_iterate;
use nnta::sketch::derive_seed;
use nnta::tt::nttsvd;
use nnta::tucker::nsthosvd;
use nnta::{NlrtState, ProjectionOptions, TruncationStrategy};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Nsthosvd,
    Nttsvd,
    Nlrt,
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Nsthosvd => "nsthosvd",
            Self::Nttsvd => "nttsvd",
            Self::Nlrt => "nlrt",
        })
    }
}

/// A truncation strategy written as `det`, `hmt:P:K` or `tropp:K:L`. The
/// seed is filled in per configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Variant(pub TruncationStrategy);

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> std::result::Result<usize, String> {
            parts[i].parse().map_err(|_| format!("bad number {:?} in variant {s:?}", parts[i]))
        };
        let strategy = match (parts[0], parts.len()) {
            ("det", 1) => TruncationStrategy::Deterministic,
            ("hmt", 3) => TruncationStrategy::Hmt {
                power: num(1)?,
                sketch: num(2)?,
                seed: 0,
            },
            ("tropp", 3) => TruncationStrategy::Tropp {
                sketch: num(1)?,
                cosketch: num(2)?,
                seed: 0,
            },
            _ => return Err(format!("unknown variant {s:?}; expected det, hmt:P:K or tropp:K:L")),
        };
        strategy.validate().map_err(|e| e.to_string())?;
        Ok(Self(strategy))
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            TruncationStrategy::Deterministic => write!(f, "det"),
            TruncationStrategy::Hmt { power, sketch, .. } => write!(f, "hmt:{power}:{sketch}"),
            TruncationStrategy::Tropp { sketch, cosketch, .. } => write!(f, "tropp:{sketch}:{cosketch}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub solver: Solver,
    pub variants: Vec<Variant>,
    pub sizes: Vec<usize>,
    /// Cube order `d`; the tensors are `n^d` Hilbert tensors.
    pub order: usize,
    pub ranks: Vec<usize>,
    /// Iterations per measurement, the first of which is discarded.
    pub iterations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub solver: Solver,
    pub strategy: String,
    pub n: usize,
    pub samples: usize,
    pub median_s: f64,
    pub min_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub solver: Solver,
    pub strategy: String,
    pub sizes: Vec<usize>,
    pub slope: f64,
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Least-squares slope of `ln t` against `ln n`.
pub fn loglog_slope(ns: &[usize], ts: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Per-iteration times of one configuration, warm-up excluded.
pub fn time_iterations(
    solver: Solver,
    strategy: TruncationStrategy,
    n: usize,
    order: usize,
    ranks: &[usize],
    iterations: usize,
) -> Result<Vec<f64>> {
    let x = hilbert_tensor(&vec![n; order])?;
    let options = ProjectionOptions::new(iterations, strategy);
    let trace = match solver {
        Solver::Nsthosvd => nsthosvd(&x, ranks, &options)?.1,
        Solver::Nttsvd => nttsvd(&x, ranks, &options)?.1,
        Solver::Nlrt => {
            let state = NlrtState::from_tensor(&x, ranks)?;
            nlrt_iterate(&x, state, iterations)?.1.swap_remove(0)
        }
    };
    Ok(trace.iteration_times().split_off(1))
}

pub fn run_bench(config: &BenchConfig) -> Result<(Vec<BenchRow>, Vec<SlopeEstimate>)> {
    if config.iterations < 2 {
        return Err(CliError::config("bench needs at least 2 iterations (the first is warm-up)"));
    }
    if config.sizes.is_empty() || config.variants.is_empty() {
        return Err(CliError::config("bench needs at least one size and one variant"));
    }
    if config.solver == Solver::Nlrt && config.variants.iter().any(|v| v.0.is_randomized()) {
        return Err(CliError::config("NLRT uses the deterministic SVD only"));
    }
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    for variant in &config.variants {
        let label = variant.to_string();
        let mut medians = Vec::new();
        for &n in &config.sizes {
            let seed = derive_seed(config.seed, &format!("bench/{}/{label}", config.solver), n as u64);
            let times = time_iterations(
                config.solver,
                variant.0.with_seed(seed),
                n,
                config.order,
                &config.ranks,
                config.iterations,
            )?;
            let m = median(&times);
            medians.push(m);
            rows.push(BenchRow {
                solver: config.solver,
                strategy: label.clone(),
                n,
                samples: times.len(),
                median_s: m,
                min_s: times.iter().copied().fold(f64::INFINITY, f64::min),
            });
        }
        if config.sizes.len() >= 2 {
            slopes.push(SlopeEstimate {
                solver: config.solver,
                strategy: label,
                sizes: config.sizes.clone(),
                slope: loglog_slope(&config.sizes, &medians),
            });
        }
    }
    Ok((rows, slopes))
}

pub fn write_bench_csv(path: &Path, rows: &[BenchRow]) -> Result<()> {
    let map = |e: csv::Error| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(map)?;
    for r in rows {
        w.serialize(r).map_err(map)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
