//! Test tensors and on-disk storage.
//!
//! # DTEN container
//!
//! All integers and reals are little-endian regardless of host:
//!
//! | bytes        | content                                   |
//! |--------------|-------------------------------------------|
//! | 4            | magic `b"DTEN"`                           |
//! | 4 (`u32`)    | format version, currently `1`             |
//! | 4 (`u32`)    | number of modes `d ≥ 1`                   |
//! | 8·d (`u64`)  | extents `n₁ … n_d`                        |
//! | 8·∏n (`f64`) | entries in row-major order (last fastest) |
//!
//! Provenance metadata lives in an optional JSON sidecar next to the file
//! (`<file>.json`); its keys are free-form.

use std::fs;
use std::path::{Path, PathBuf};

use faer::Side;
use serde::{Deserialize, Serialize};

use crate::error::{Error, FormatError, Result};
use crate::matrix::Matrix;
use crate::tensor::DenseTensor;

pub const DTEN_MAGIC: [u8; 4] = *b"DTEN";
pub const DTEN_VERSION: u32 = 1;

/// `X(i₁,…,i_d) = 1 / (i₁ + … + i_d − d + 1)` with 1-based indices.
pub fn hilbert_tensor(shape: &[usize]) -> Result<DenseTensor> {
    let d = shape.len();
    DenseTensor::from_fn(shape, |idx| {
        1.0 / (idx.iter().sum::<usize>() + 1 - d) as f64
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Symmetric positive definite `d × d`, row-major.
    pub covariance: Vec<f64>,
}

/// Mixture `f(x) = Σⱼ αⱼ exp(−½ (x−μⱼ)ᵀ Aⱼ⁻¹ (x−μⱼ))` sampled on the
/// equidistant grid of `n` points per axis over `[−a, a]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixtureSpec {
    pub dim: usize,
    pub n: usize,
    pub half_width: f64,
    pub components: Vec<GaussianComponent>,
}

impl GaussianMixtureSpec {
    /// Balanced two-component mixture in four dimensions with correlated
    /// covariances, on `[−1, 1]⁴`. Both weights are 1.
    pub fn balanced_pair(n: usize) -> Self {
        #[rustfmt::skip]
        let a1 = vec![
            0.403, 0.236, 0.159, 0.188,
            0.236, 0.422, 0.193, 0.313,
            0.159, 0.193, 0.124, 0.164,
            0.188, 0.313, 0.164, 0.288,
        ];
        #[rustfmt::skip]
        let a2 = vec![
            0.173, 0.229, 0.200, 0.191,
            0.229, 0.347, 0.254, 0.201,
            0.200, 0.254, 0.348, 0.252,
            0.191, 0.201, 0.252, 0.360,
        ];
        Self {
            dim: 4,
            n,
            half_width: 1.0,
            components: vec![
                GaussianComponent {
                    weight: 1.0,
                    mean: vec![0.0; 4],
                    covariance: a1,
                },
                GaussianComponent {
                    weight: 1.0,
                    mean: vec![0.5, -0.5, 0.5, -0.5],
                    covariance: a2,
                },
            ],
        }
    }

    /// Grid coordinate of the 1-based index `i`.
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + (i - 1) as f64 * 2.0 * self.half_width / (self.n - 1) as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.n < 2 {
            return Err(Error::InvalidMixture(format!(
                "need d >= 1 and n >= 2, got d = {}, n = {}",
                self.dim, self.n
            )));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::InvalidMixture("half-width must be positive".into()));
        }
        if self.components.is_empty() {
            return Err(Error::InvalidMixture("no components".into()));
        }
        let d = self.dim;
        for (j, c) in self.components.iter().enumerate() {
            if c.mean.len() != d || c.covariance.len() != d * d {
                return Err(Error::InvalidMixture(format!(
                    "component {} has mean of length {} and covariance of length {}",
                    j + 1,
                    c.mean.len(),
                    c.covariance.len()
                )));
            }
            let a = Matrix::new(d, d, c.covariance.clone())?;
            let symmetric = (0..d).all(|r| (0..d).all(|s| (a.get(r, s) - a.get(s, r)).abs() <= 1e-12));
            if !symmetric {
                return Err(Error::SingularCovariance(j + 1));
            }
            let eig = a
                .view()
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|_| Error::SingularCovariance(j + 1))?;
            if eig.iter().any(|&l| l < 1e-10) {
                return Err(Error::SingularCovariance(j + 1));
            }
        }
        Ok(())
    }
}

/// Samples the mixture on its grid.
pub fn gaussian_mixture_tensor(spec: &GaussianMixtureSpec) -> Result<DenseTensor> {
    spec.validate()?;
    let d = spec.dim;
    let precisions: Vec<Matrix> = spec
        .components
        .iter()
        .enumerate()
        .map(|(j, c)| spd_inverse(&Matrix::from_parts(d, d, c.covariance.clone()), j + 1))
        .collect::<Result<_>>()?;
    let coords: Vec<f64> = (1..=spec.n).map(|i| spec.coordinate(i)).collect();
    let shape = vec![spec.n; d];
    let mut diff = vec![0.0; d];
    DenseTensor::from_fn(&shape, |idx| {
        spec.components
            .iter()
            .zip(&precisions)
            .map(|(c, p)| {
                for m in 0..d {
                    diff[m] = coords[idx[m] - 1] - c.mean[m];
                }
                let mut q = 0.0;
                for r in 0..d {
                    let row = p.row(r);
                    q += diff[r] * row.iter().zip(&diff).map(|(a, b)| a * b).sum::<f64>();
                }
                c.weight * (-0.5 * q).exp()
            })
            .sum()
    })
}

fn spd_inverse(a: &Matrix, component: usize) -> Result<Matrix> {
    use faer::linalg::solvers::DenseSolveCore;
    let llt = a
        .view()
        .llt(Side::Lower)
        .map_err(|_| Error::SingularCovariance(component))?;
    Ok(Matrix::from_faer(llt.inverse().as_ref()))
}

/// Serializes a tensor into DTEN bytes.
pub fn encode_tensor(x: &DenseTensor) -> Vec<u8> {
    let mut buf = Vec::with_capacity(12 + 8 * x.order() + 8 * x.len());
    buf.extend_from_slice(&DTEN_MAGIC);
    buf.extend_from_slice(&DTEN_VERSION.to_le_bytes());
    buf.extend_from_slice(&(x.order() as u32).to_le_bytes());
    for &n in x.shape() {
        buf.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for v in x.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> std::result::Result<&'a [u8], FormatError> {
    if bytes.len() < n {
        return Err(FormatError::Truncated {
            expected: n as u64,
            found: bytes.len() as u64,
        });
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

/// Parses DTEN bytes.
pub fn decode_tensor(mut bytes: &[u8]) -> Result<DenseTensor> {
    let magic: [u8; 4] = take(&mut bytes, 4)?.try_into().expect("4 bytes");
    if magic != DTEN_MAGIC {
        return Err(FormatError::BadMagic(magic).into());
    }
    let version = u32::from_le_bytes(take(&mut bytes, 4)?.try_into().expect("4 bytes"));
    if version != DTEN_VERSION {
        return Err(FormatError::UnsupportedVersion(version).into());
    }
    let d = u32::from_le_bytes(take(&mut bytes, 4)?.try_into().expect("4 bytes")) as usize;
    if d == 0 {
        return Err(FormatError::DimensionOverflow("zero modes".into()).into());
    }
    let header = d
        .checked_mul(8)
        .ok_or_else(|| FormatError::DimensionOverflow(format!("{d} modes")))?;
    let extents = take(&mut bytes, header)?;
    let mut shape = Vec::with_capacity(d);
    for chunk in extents.chunks_exact(8) {
        let n = u64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        let n = usize::try_from(n).map_err(|_| FormatError::DimensionOverflow(format!("extent {n}")))?;
        shape.push(n);
    }
    let payload = shape
        .iter()
        .try_fold(8usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| FormatError::DimensionOverflow(format!("shape {shape:?}")))?;
    if bytes.len() < payload {
        return Err(FormatError::Truncated {
            expected: payload as u64,
            found: bytes.len() as u64,
        }
        .into());
    }
    if bytes.len() > payload {
        return Err(FormatError::TrailingBytes((bytes.len() - payload) as u64).into());
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    DenseTensor::new(shape, data)
}

pub fn save_tensor(x: &DenseTensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_tensor(x)).map_err(|e| Error::io(path, e))
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensor(&bytes)
}

pub fn save_matrix(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    save_tensor(&DenseTensor::from_matrix(m.clone()), path)
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let t = load_tensor(path)?;
    if t.order() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "expected a 2-D tensor, found shape {:?}",
            t.shape()
        )));
    }
    let (r, c) = (t.shape()[0], t.shape()[1]);
    Matrix::new(r, c, t.into_data())
}

/// Reads headerless little-endian `f64` values in row-major order.
pub fn load_raw_f64(path: impl AsRef<Path>, shape: &[usize]) -> Result<DenseTensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(FormatError::TrailingBytes((bytes.len() % 8) as u64).into());
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    DenseTensor::new(shape.to_vec(), data)
}

pub fn sidecar_path(path: impl AsRef<Path>) -> PathBuf {
    let mut s = path.as_ref().as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_sidecar(path: impl AsRef<Path>, meta: &serde_json::Value) -> Result<()> {
    let side = sidecar_path(path);
    let text = serde_json::to_string_pretty(meta).map_err(|e| FormatError::Sidecar(e.to_string()))?;
    fs::write(&side, text).map_err(|e| Error::io(&side, e))
}

/// Sidecar metadata if present.
pub fn read_sidecar(path: impl AsRef<Path>) -> Result<Option<serde_json::Value>> {
    let side = sidecar_path(path);
    match fs::read_to_string(&side) {
        Ok(text) => serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| FormatError::Sidecar(e.to_string()).into()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::io(&side, e)),
    }
}

/// Linear map of the entries onto `[0, 1]`; returns the original range.
pub fn rescale_unit_interval(x: &DenseTensor) -> Result<(DenseTensor, f64, f64)> {
    let min = x.data().iter().copied().fold(f64::INFINITY, f64::min);
    let max = x.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= min {
        return Err(Error::InvalidArgument("cannot rescale a constant tensor".into()));
    }
    let span = max - min;
    let data = x.data().iter().map(|v| (v - min) / span).collect();
    Ok((DenseTensor::new(x.shape().to_vec(), data)?, min, max))
}

/// Imports an external cube: rescales to `[0, 1]` and writes it as DTEN
/// with a sidecar recording the source and the original range.
pub fn import_cube(x: &DenseTensor, source: &str, dst: impl AsRef<Path>) -> Result<DenseTensor> {
    let dst = dst.as_ref();
    let (scaled, min, max) = rescale_unit_interval(x)?;
    save_tensor(&scaled, dst)?;
    write_sidecar(
        dst,
        &serde_json::json!({
            "source": source,
            "shape": x.shape(),
            "rescale_min": min,
            "rescale_max": max,
        }),
    )?;
    Ok(scaled)
}
