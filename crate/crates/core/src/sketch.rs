//! Rank truncation backends: the deterministic truncated SVD and the two
//! randomized sketching SVDs (randomized subspace iteration followed by a
//! projected SVD, and the two-sided sketch with a triangular core solve).
//!
//! All randomness flows through ChaCha8 streams whose seeds are derived from
//! `(seed, call-site label, call index)` with [`derive_seed`], so a fixed
//! seed reproduces every sketch bit for bit regardless of call order
//! elsewhere in the program.

use std::fmt;

use faer::linalg::triangular_solve::solve_upper_triangular_in_place;
use faer::Par;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Random stream used for test matrices.
pub type SketchRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Child seed for the `index`-th call made from `label`:
/// `splitmix64(splitmix64(seed ^ fnv1a(label)) ^ index)`.
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ fnv1a(label)) ^ index)
}

pub fn sketch_rng(seed: u64, label: &str, index: u64) -> SketchRng {
    SketchRng::seed_from_u64(derive_seed(seed, label, index))
}

/// `rows × cols` matrix of iid ±1 entries. Entries are filled in row-major
/// order from successive 64-bit words of `rng`, least significant bit first;
/// a set bit gives `+1`.
pub fn rademacher_matrix(rows: usize, cols: usize, rng: &mut SketchRng) -> Matrix {
    let len = rows * cols;
    let mut data = Vec::with_capacity(len);
    while data.len() < len {
        let word = rng.next_u64();
        let take = (len - data.len()).min(64);
        data.extend((0..take).map(|b| if (word >> b) & 1 == 1 { 1.0 } else { -1.0 }));
    }
    Matrix::from_parts(rows, cols, data)
}

/// Rank-`r` factorization `U · diag(S) · Vt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSvd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub vt: Matrix,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        us.scale_cols(&self.s);
        us.matmul(&self.vt).expect("factor shapes are consistent")
    }

    /// `diag(S) · Vt`, the coefficient block that multiplies `U`.
    pub fn weighted_vt(&self) -> Matrix {
        let mut svt = self.vt.clone();
        svt.scale_rows(&self.s);
        svt
    }

    /// Flips singular vector pairs so that the largest-magnitude entry of each
    /// left vector is positive (first such entry on ties).
    fn normalize_signs(&mut self) {
        let (m, r) = self.u.shape();
        for j in 0..r {
            let mut best = 0usize;
            let mut best_abs = -1.0;
            for i in 0..m {
                let v = self.u.get(i, j).abs();
                if v > best_abs {
                    best_abs = v;
                    best = i;
                }
            }
            if self.u.get(best, j) < 0.0 {
                for i in 0..m {
                    self.u.set(i, j, -self.u.get(i, j));
                }
                let n = self.vt.cols();
                for v in &mut self.vt.data_mut()[j * n..(j + 1) * n] {
                    *v = -*v;
                }
            }
        }
    }
}

fn check_finite(a: &Matrix) -> Result<()> {
    if a.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn effective_rank(a: &Matrix, r: usize) -> Result<usize> {
    if r == 0 {
        return Err(Error::InvalidRank("truncation rank must be at least 1".into()));
    }
    Ok(r.min(a.rows()).min(a.cols()))
}

fn orthonormal_basis(z: &Matrix) -> Matrix {
    Matrix::from_faer(z.view().qr().compute_thin_Q().as_ref())
}

/// Best rank-`r` approximation by a full thin SVD. `r` is clamped to
/// `min(m, n)`; zero singular values are kept so the result always has
/// exactly that many triplets.
pub fn truncated_svd(a: &Matrix, r: usize) -> Result<TruncatedSvd> {
    check_finite(a)?;
    let r = effective_rank(a, r)?;
    let svd = a.view().thin_svd().map_err(|_| Error::SvdNotConverged)?;
    let s: Vec<f64> = (0..r).map(|i| svd.S()[i]).collect();
    let u = Matrix::from_faer(svd.U().subcols(0, r));
    let v = svd.V();
    let n = a.cols();
    let mut vt = Vec::with_capacity(r * n);
    for j in 0..r {
        vt.extend(v.col(j).iter().copied());
    }
    let mut out = TruncatedSvd {
        u,
        s,
        vt: Matrix::from_parts(r, n, vt),
    };
    out.normalize_signs();
    Ok(out)
}

/// Orthonormal basis for the range of `AΨ` with an `n × k` Rademacher `Ψ`.
/// When `k ≥ n` the sketch cannot be smaller than `A` itself, and a square
/// `±1` matrix is singular with noticeable probability, so the exact range
/// `orth(A)` is returned and nothing is drawn from `rng`.
fn range_sketch(a: &Matrix, k: usize, rng: &mut SketchRng) -> Result<(Matrix, bool)> {
    if k >= a.cols() {
        return Ok((orthonormal_basis(a), true));
    }
    let k = k.min(a.rows());
    let psi = rademacher_matrix(a.cols(), k, rng);
    Ok((orthonormal_basis(&a.matmul(&psi)?), false))
}

/// Orthonormal basis for the range of `(A Aᵀ)ᵖ A Ψ` with a Rademacher `Ψ`,
/// re-orthonormalizing after every multiplication. `k` is clamped to
/// `min(m, n)`; at `k ≥ n` the basis spans the exact range of `A`.
pub fn randomized_range(a: &Matrix, k: usize, p: usize, rng: &mut SketchRng) -> Result<Matrix> {
    check_finite(a)?;
    if k == 0 {
        return Err(Error::InvalidSketch("range sketch size must be at least 1".into()));
    }
    let (mut q, exact) = range_sketch(a, k, rng)?;
    if exact {
        return Ok(q);
    }
    for _ in 0..p {
        // (QᵀA)ᵀ = AᵀQ
        let q_row = orthonormal_basis(&a.t_matmul(&q)?);
        q = orthonormal_basis(&a.matmul(&q_row)?);
    }
    Ok(q)
}

/// Randomized truncated SVD from a subspace-iteration range basis:
/// `Z = QᵀA`, `SVD_r(Z)`, `U ← Q U`.
pub fn hmt_svd(a: &Matrix, r: usize, k: usize, p: usize, rng: &mut SketchRng) -> Result<TruncatedSvd> {
    check_finite(a)?;
    let r = effective_rank(a, r)?;
    if k < r {
        return Err(Error::InvalidSketch(format!(
            "range sketch size k = {k} is below the target rank {r}"
        )));
    }
    let q = randomized_range(a, k, p, rng)?;
    let z = q.t_matmul(a)?;
    project_back(&q, &z, r)
}

/// Two-sided sketch: `Q` from `AΨ`, `[P, T] = QR(ΦQ)`, core
/// `G = T⁻¹ Pᵀ Φ A` by triangular solve, then `SVD_r(G)` and `U ← Q U`.
/// `Ψ` is drawn before `Φ` from the same stream; at `k ≥ n` only `Φ` is
/// drawn and `Q` spans the exact range of `A`.
pub fn tropp_svd(a: &Matrix, r: usize, k: usize, l: usize, rng: &mut SketchRng) -> Result<TruncatedSvd> {
    check_finite(a)?;
    let r = effective_rank(a, r)?;
    if k < r || l < k {
        return Err(Error::InvalidSketch(format!(
            "need l >= k >= r, got l = {l}, k = {k}, r = {r}"
        )));
    }
    let (q, _) = range_sketch(a, k, rng)?;
    let k = q.cols();
    let phi = rademacher_matrix(l, a.rows(), rng);
    let w = phi.matmul(&q)?;
    let qr = w.view().qr();
    let p = Matrix::from_faer(qr.compute_thin_Q().as_ref());
    let t = qr.thin_R();

    let pivots: Vec<f64> = (0..t.nrows()).map(|i| t[(i, i)].abs()).collect();
    let max_pivot = pivots.iter().copied().fold(0.0, f64::max);
    let min_pivot = pivots.iter().copied().fold(f64::INFINITY, f64::min);
    if min_pivot.is_nan() || min_pivot <= f64::EPSILON * k as f64 * max_pivot {
        return Err(Error::IllConditionedSketch {
            min_pivot,
            max_pivot,
        });
    }

    let phi_a = phi.matmul(a)?;
    let mut g = p.t_matmul(&phi_a)?;
    solve_upper_triangular_in_place(t, g.view_mut(), Par::Seq);
    if !g.is_finite() {
        return Err(Error::IllConditionedSketch {
            min_pivot,
            max_pivot,
        });
    }
    project_back(&q, &g, r)
}

fn project_back(q: &Matrix, core: &Matrix, r: usize) -> Result<TruncatedSvd> {
    let small = truncated_svd(core, r)?;
    let mut out = TruncatedSvd {
        u: q.matmul(&small.u)?,
        s: small.s,
        vt: small.vt,
    };
    out.normalize_signs();
    Ok(out)
}

/// Backend used wherever a rank truncation `SVD_r` appears.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TruncationStrategy {
    /// Full thin SVD, truncated.
    #[default]
    Deterministic,
    /// Subspace iteration with `power` refinement steps and `sketch`
    /// columns, then a projected SVD.
    Hmt { power: usize, sketch: usize, seed: u64 },
    /// Range sketch of `sketch` columns and co-range sketch of `cosketch`
    /// rows.
    Tropp { sketch: usize, cosketch: usize, seed: u64 },
}

impl TruncationStrategy {
    pub fn is_randomized(&self) -> bool {
        !matches!(self, Self::Deterministic)
    }

    pub fn seed(&self) -> Option<u64> {
        match *self {
            Self::Deterministic => None,
            Self::Hmt { seed, .. } | Self::Tropp { seed, .. } => Some(seed),
        }
    }

    /// Same strategy with another seed; no-op for the deterministic backend.
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            Self::Deterministic => self,
            Self::Hmt { power, sketch, .. } => Self::Hmt { power, sketch, seed },
            Self::Tropp { sketch, cosketch, .. } => Self::Tropp {
                sketch,
                cosketch,
                seed,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Deterministic => Ok(()),
            Self::Hmt { sketch: 0, .. } => {
                Err(Error::InvalidSketch("HMT sketch size must be positive".into()))
            }
            Self::Tropp { sketch, cosketch, .. } if sketch == 0 || cosketch < sketch => Err(
                Error::InvalidSketch(format!("Tropp needs l >= k >= 1, got k = {sketch}, l = {cosketch}")),
            ),
            _ => Ok(()),
        }
    }

    /// Rank-`r` truncation of `a`. Randomized backends draw from the stream
    /// keyed by `(seed, label, index)`.
    pub fn truncate(&self, a: &Matrix, r: usize, label: &str, index: u64) -> Result<TruncatedSvd> {
        match *self {
            Self::Deterministic => truncated_svd(a, r),
            Self::Hmt { power, sketch, seed } => {
                let mut rng = sketch_rng(seed, label, index);
                hmt_svd(a, r, sketch, power, &mut rng)
            }
            Self::Tropp { sketch, cosketch, seed } => {
                let mut rng = sketch_rng(seed, label, index);
                tropp_svd(a, r, sketch, cosketch, &mut rng)
            }
        }
    }
}

impl fmt::Display for TruncationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Deterministic => write!(f, "SVD_r"),
            Self::Hmt { power, sketch, .. } => write!(f, "HMT({power}, {sketch})"),
            Self::Tropp { sketch, cosketch, .. } => write!(f, "Tropp({sketch}, {cosketch})"),
        }
    }
}
