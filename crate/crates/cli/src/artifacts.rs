//! On-disk artifacts: trace CSV, decomposition directories with a JSON
//! manifest, and JSON helpers.

use std::fs;
use std::path::{Path, PathBuf};

use nnta::data::{load_tensor, save_tensor};
use nnta::{ConvergenceTrace, DenseTensor, Matrix, NegativityStats, TraceRow, TtDecomposition, TuckerDecomposition};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const TRACE_HEADER: [&str; 7] = [
    "iteration",
    "neg_frobenius",
    "neg_chebyshev",
    "neg_fraction",
    "rel_err_frobenius",
    "rel_err_chebyshev",
    "elapsed_s",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct TraceRecord {
    iteration: usize,
    neg_frobenius: f64,
    neg_chebyshev: f64,
    neg_fraction: f64,
    rel_err_frobenius: f64,
    rel_err_chebyshev: f64,
    elapsed_s: f64,
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::io(path, source),
        other => CliError::Parse {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

/// One row per iteration. With `omit_timings` the `elapsed_s` column is
/// written as 0 so that repeated runs produce identical files.
pub fn write_trace_csv(path: &Path, trace: &ConvergenceTrace, omit_timings: bool) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in &trace.rows {
        w.serialize(TraceRecord {
            iteration: r.iteration,
            neg_frobenius: r.negativity.frobenius,
            neg_chebyshev: r.negativity.chebyshev,
            neg_fraction: r.negativity.fraction,
            rel_err_frobenius: r.rel_err_frobenius,
            rel_err_chebyshev: r.rel_err_chebyshev,
            elapsed_s: if omit_timings { 0.0 } else { r.elapsed_s },
        })
        .map_err(|e| csv_error(path, e))?;
    }
    if trace.rows.is_empty() {
        w.write_record(TRACE_HEADER).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_trace_csv(path: &Path) -> Result<ConvergenceTrace> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(TRACE_HEADER) {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            message: format!("unexpected trace header {header:?}"),
        });
    }
    let rows = r
        .deserialize::<TraceRecord>()
        .map(|rec| {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            Ok(TraceRow {
                iteration: rec.iteration,
                negativity: NegativityStats {
                    frobenius: rec.neg_frobenius,
                    chebyshev: rec.neg_chebyshev,
                    fraction: rec.neg_fraction,
                },
                rel_err_frobenius: rec.rel_err_frobenius,
                rel_err_chebyshev: rec.rel_err_chebyshev,
                elapsed_s: rec.elapsed_s,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTrace { rows })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decomposition {
    Tucker(TuckerDecomposition),
    Tt(TtDecomposition),
}

impl Decomposition {
    pub fn reconstruct(&self) -> DenseTensor {
        match self {
            Self::Tucker(t) => t.reconstruct(),
            Self::Tt(t) => t.reconstruct(),
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        match self {
            Self::Tucker(t) => t.shape(),
            Self::Tt(t) => t.shape(),
        }
    }

    pub fn ranks(&self) -> Vec<usize> {
        match self {
            Self::Tucker(t) => t.ranks().to_vec(),
            Self::Tt(t) => t.ranks(),
        }
    }
}

/// `manifest.json` of a decomposition directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// `"tucker"` or `"tt"`.
    pub format: String,
    pub shape: Vec<usize>,
    pub ranks: Vec<usize>,
    pub version: String,
    pub parts: Vec<Part>,
}

/// Tucker parts are the core (`role = "core"`, no index) and one factor
/// per mode (`role = "factor"`, 1-based `index`). TT parts are 3-D cores
/// `r_{k−1} × n_k × r_k` with `r_0 = r_d = 1` (`role = "core"`, index `k`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub file: String,
    pub shape: Vec<usize>,
}

pub const MANIFEST: &str = "manifest.json";

fn save_part(dir: &Path, parts: &mut Vec<Part>, role: &str, index: Option<usize>, x: &DenseTensor) -> Result<()> {
    let file = match index {
        Some(i) => format!("{role}_{i}.dten"),
        None => format!("{role}.dten"),
    };
    save_tensor(x, dir.join(&file))?;
    parts.push(Part {
        role: role.into(),
        index,
        file,
        shape: x.shape().to_vec(),
    });
    Ok(())
}

pub fn save_decomposition(dir: &Path, d: &Decomposition) -> Result<PathBuf> {
    create_dir(dir)?;
    let mut parts = Vec::new();
    let format = match d {
        Decomposition::Tucker(t) => {
            save_part(dir, &mut parts, "core", None, &t.core)?;
            for (k, u) in t.factors.iter().enumerate() {
                save_part(dir, &mut parts, "factor", Some(k + 1), &DenseTensor::from_matrix(u.clone()))?;
            }
            "tucker"
        }
        Decomposition::Tt(t) => {
            let first = DenseTensor::from_matrix(t.first.clone()).reshape(vec![1, t.first.rows(), t.first.cols()])?;
            save_part(dir, &mut parts, "core", Some(1), &first)?;
            for (k, c) in t.cores.iter().enumerate() {
                save_part(dir, &mut parts, "core", Some(k + 2), c)?;
            }
            let last = DenseTensor::from_matrix(t.last.clone()).reshape(vec![t.last.rows(), t.last.cols(), 1])?;
            save_part(dir, &mut parts, "core", Some(t.cores.len() + 2), &last)?;
            "tt"
        }
    };
    let manifest = Manifest {
        format: format.into(),
        shape: d.shape(),
        ranks: d.ranks(),
        version: nnta::VERSION.into(),
        parts,
    };
    let path = dir.join(MANIFEST);
    write_json(&path, &manifest)?;
    Ok(path)
}

fn bad_manifest(dir: &Path, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: dir.join(MANIFEST),
        message: message.into(),
    }
}

fn to_matrix(x: DenseTensor, rows: usize, cols: usize) -> Result<Matrix> {
    Ok(Matrix::new(rows, cols, x.into_data())?)
}

pub fn load_decomposition(dir: &Path) -> Result<Decomposition> {
    let manifest: Manifest = read_json(&dir.join(MANIFEST))?;
    let load = |p: &Part| -> Result<DenseTensor> {
        let x = load_tensor(dir.join(&p.file))?;
        if x.shape() != p.shape.as_slice() {
            return Err(bad_manifest(dir, format!("{} has shape {:?}, manifest says {:?}", p.file, x.shape(), p.shape)));
        }
        Ok(x)
    };
    let indexed = |role: &str| {
        let mut v: Vec<&Part> = manifest.parts.iter().filter(|p| p.role == role && p.index.is_some()).collect();
        v.sort_by_key(|p| p.index);
        v
    };
    match manifest.format.as_str() {
        "tucker" => {
            let core = manifest
                .parts
                .iter()
                .find(|p| p.role == "core" && p.index.is_none())
                .ok_or_else(|| bad_manifest(dir, "no core part"))?;
            let factors = indexed("factor")
                .into_iter()
                .map(|p| {
                    let x = load(p)?;
                    if x.order() != 2 {
                        return Err(bad_manifest(dir, format!("factor {} is not 2-D", p.file)));
                    }
                    let (r, c) = (x.shape()[0], x.shape()[1]);
                    to_matrix(x, r, c)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Decomposition::Tucker(TuckerDecomposition::new(load(core)?, factors)?))
        }
        "tt" => {
            let mut cores = indexed("core")
                .into_iter()
                .map(|p| {
                    let x = load(p)?;
                    if x.order() != 3 {
                        return Err(bad_manifest(dir, format!("TT core {} is not 3-D", p.file)));
                    }
                    Ok(x)
                })
                .collect::<Result<Vec<_>>>()?;
            if cores.len() < 2 {
                return Err(bad_manifest(dir, "a TT decomposition needs at least two cores"));
            }
            let last = cores.pop().expect("checked");
            let first = cores.remove(0);
            let (n1, r1) = (first.shape()[1], first.shape()[2]);
            let (rl, nl) = (last.shape()[0], last.shape()[1]);
            Ok(Decomposition::Tt(TtDecomposition::new(
                to_matrix(first, n1, r1)?,
                cores,
                to_matrix(last, rl, nl)?,
            )?))
        }
        other => Err(bad_manifest(dir, format!("unknown format {other:?}"))),
    }
}
