//! Experiment configuration. A TOML file and command-line flags both
//! produce a [`PartialConfig`]; flags are merged over the file and the
//! result is resolved into a complete [`ExperimentConfig`].

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use nnta::data::{gaussian_mixture_tensor, hilbert_tensor, load_tensor, GaussianMixtureSpec};
use nnta::{DenseTensor, TruncationStrategy};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Hilbert { shape: Vec<usize> },
    /// The balanced two-component 4-D mixture on `n⁴` grid points.
    Gaussian { n: usize },
    File { path: PathBuf },
}

impl DatasetSource {
    pub fn load(&self) -> Result<DenseTensor> {
        Ok(match self {
            Self::Hilbert { shape } => hilbert_tensor(shape)?,
            Self::Gaussian { n } => gaussian_mixture_tensor(&GaussianMixtureSpec::balanced_pair(*n))?,
            Self::File { path } => load_tensor(path)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Tucker,
    Tt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// A single STHOSVD or TTSVD.
    Plain,
    /// Alternating projections (NSTHOSVD or NTTSVD).
    Projection,
    /// The consensus baseline; Tucker format only.
    Nlrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SvdKind {
    Det,
    Hmt,
    Tropp,
}

/// Every setting optional; the shape of both the config file and the flag
/// set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub dataset: Option<DatasetSource>,
    pub format: Option<Format>,
    pub method: Option<Method>,
    pub ranks: Option<Vec<usize>>,
    pub svd: Option<SvdKind>,
    pub sketch_k: Option<usize>,
    pub power: Option<usize>,
    pub cotail_l: Option<usize>,
    pub iters: Option<usize>,
    pub seed: Option<u64>,
    pub stop_below: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub omit_timings: Option<bool>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        PartialConfig { $($field: $top.$field.or($base.$field)),* }
    };
}

impl PartialConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    /// Values set in `top` win.
    pub fn merge(self, top: PartialConfig) -> Self {
        let base = self;
        overlay!(base, top; dataset, format, method, ranks, svd, sketch_k, power, cotail_l,
                 iters, seed, stop_below, out_dir, omit_timings)
    }

    pub fn resolve(self, default_out_dir: &Path) -> Result<ExperimentConfig> {
        let dataset = self
            .dataset
            .ok_or_else(|| CliError::config("no dataset given (use --input, --hilbert or --gaussian)"))?;
        let method = self.method.unwrap_or(Method::Projection);
        let format = self.format.unwrap_or(Format::Tucker);
        let ranks = self.ranks.ok_or_else(|| CliError::config("--ranks is required"))?;
        if ranks.is_empty() || ranks.contains(&0) {
            return Err(CliError::config("ranks must be positive"));
        }
        if method == Method::Nlrt && format != Format::Tucker {
            return Err(CliError::config("NLRT works in Tucker format only"));
        }
        let iterations = match (method, self.iters) {
            (Method::Plain, None | Some(1)) => 1,
            (Method::Plain, Some(_)) => return Err(CliError::config("the plain method runs exactly one iteration")),
            (_, Some(0)) => return Err(CliError::config("--iters must be at least 1")),
            (_, Some(n)) => n,
            (_, None) => DEFAULT_ITERATIONS,
        };
        if let Some(t) = self.stop_below {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::config("--stop-below must be a positive number"));
            }
        }
        let svd = self.svd.unwrap_or(SvdKind::Det);
        if method == Method::Nlrt && svd != SvdKind::Det {
            return Err(CliError::config("NLRT uses the deterministic SVD only"));
        }
        let config = ExperimentConfig {
            dataset,
            format,
            method,
            ranks,
            svd,
            sketch_k: self.sketch_k,
            power: self.power,
            cotail_l: self.cotail_l,
            iterations,
            seed: self.seed.unwrap_or(0),
            stop_below: self.stop_below,
            out_dir: self.out_dir.unwrap_or_else(|| default_out_dir.to_path_buf()),
            omit_timings: self.omit_timings.unwrap_or(false),
        };
        config.strategy()?;
        Ok(config)
    }
}

pub const DEFAULT_ITERATIONS: usize = 100;

/// A complete, validated run description. Serialized verbatim into the
/// report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub format: Format,
    pub method: Method,
    pub ranks: Vec<usize>,
    pub svd: SvdKind,
    pub sketch_k: Option<usize>,
    pub power: Option<usize>,
    pub cotail_l: Option<usize>,
    pub iterations: usize,
    pub seed: u64,
    pub stop_below: Option<f64>,
    pub out_dir: PathBuf,
    pub omit_timings: bool,
}

impl ExperimentConfig {
    pub fn strategy(&self) -> Result<TruncationStrategy> {
        let need_k = || {
            self.sketch_k
                .ok_or_else(|| CliError::config("--sketch-k is required for randomized SVDs"))
        };
        let strategy = match self.svd {
            SvdKind::Det => TruncationStrategy::Deterministic,
            SvdKind::Hmt => TruncationStrategy::Hmt {
                power: self.power.unwrap_or(0),
                sketch: need_k()?,
                seed: self.seed,
            },
            SvdKind::Tropp => TruncationStrategy::Tropp {
                sketch: need_k()?,
                cosketch: self
                    .cotail_l
                    .ok_or_else(|| CliError::config("--cotail-l is required for the Tropp SVD"))?,
                seed: self.seed,
            },
        };
        strategy.validate().map_err(|e| CliError::config(e.to_string()))?;
        Ok(strategy)
    }

    /// Checks the rank count against the format and the tensor order.
    pub fn check_ranks(&self, order: usize) -> Result<()> {
        let expected = match self.format {
            Format::Tucker => order,
            Format::Tt => order.saturating_sub(1),
        };
        if self.ranks.len() != expected {
            return Err(CliError::config(format!(
                "{:?} format on an order-{order} tensor needs {expected} ranks, got {}",
                self.format,
                self.ranks.len()
            )));
        }
        Ok(())
    }

    pub fn trace_path(&self) -> PathBuf {
        self.out_dir.join("trace.csv")
    }

    pub fn report_path(&self) -> PathBuf {
        self.out_dir.join("report.json")
    }

    pub fn decomposition_dir(&self) -> PathBuf {
        self.out_dir.join("decomposition")
    }
}
