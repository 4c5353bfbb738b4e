//! Tensor-train format: TTSVD, full contraction, single-entry evaluation, and
//! the alternating-projection solver built on TTSVD.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::sketch::TruncationStrategy;
use crate::tensor::DenseTensor;
use crate::trace::{ConvergenceTrace, ProjectionOptions, ReferenceNorms};

const SEED_LABEL: &str = "ttsvd";

/// `X(i₁,…,i_d) = G₁(i₁,:) 𝑮₂(:,i₂,:) ⋯ 𝑮_{d−1}(:,i_{d−1},:) G_d(:,i_d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TtDecomposition {
    /// `n₁ × r₁`.
    pub first: Matrix,
    /// Interior cores of shape `(r_{k−1}, n_k, r_k)`.
    pub cores: Vec<DenseTensor>,
    /// `r_{d−1} × n_d`.
    pub last: Matrix,
}

impl TtDecomposition {
    pub fn new(first: Matrix, cores: Vec<DenseTensor>, last: Matrix) -> Result<Self> {
        let mut left = first.cols();
        for (k, core) in cores.iter().enumerate() {
            if core.order() != 3 || core.shape()[0] != left {
                return Err(Error::DimensionMismatch(format!(
                    "interior core {} has shape {:?}, expected ({left}, n, r)",
                    k + 2,
                    core.shape()
                )));
            }
            left = core.shape()[2];
        }
        if last.rows() != left {
            return Err(Error::DimensionMismatch(format!(
                "last core has {} rows, expected {left}",
                last.rows()
            )));
        }
        Ok(Self { first, cores, last })
    }

    pub fn order(&self) -> usize {
        self.cores.len() + 2
    }

    /// TT ranks `(r₁,…,r_{d−1})`.
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![self.first.cols()];
        ranks.extend(self.cores.iter().map(|c| c.shape()[2]));
        ranks
    }

    pub fn shape(&self) -> Vec<usize> {
        let mut shape = vec![self.first.rows()];
        shape.extend(self.cores.iter().map(|c| c.shape()[1]));
        shape.push(self.last.cols());
        shape
    }

    /// Full tensor by left-to-right contraction of the cores.
    pub fn reconstruct(&self) -> DenseTensor {
        let mut acc = self.first.clone();
        for core in &self.cores {
            let (r0, n, r1) = (core.shape()[0], core.shape()[1], core.shape()[2]);
            let unfolded = Matrix::from_parts(r0, n * r1, core.data().to_vec());
            let next = acc.matmul(&unfolded).expect("validated chain");
            acc = Matrix::from_parts(next.rows() * n, r1, next.into_data());
        }
        let full = acc.matmul(&self.last).expect("validated chain");
        DenseTensor::from_parts(self.shape(), full.into_data())
    }

    /// Single entry at a 1-based multi-index via a chain of vector–matrix
    /// products.
    pub fn element(&self, index: &[usize]) -> Result<f64> {
        let shape = self.shape();
        if index.len() != shape.len() || index.iter().zip(&shape).any(|(&i, &n)| i == 0 || i > n) {
            return Err(Error::IndexOutOfBounds {
                index: index.to_vec(),
                shape,
            });
        }
        let mut v = self.first.row(index[0] - 1).to_vec();
        for (core, &i) in self.cores.iter().zip(&index[1..]) {
            let (n, r1) = (core.shape()[1], core.shape()[2]);
            let mut next = vec![0.0; r1];
            for (alpha, &va) in v.iter().enumerate() {
                let slab = &core.data()[(alpha * n + i - 1) * r1..(alpha * n + i) * r1];
                next.iter_mut().zip(slab).for_each(|(acc, g)| *acc += va * g);
            }
            v = next;
        }
        let j = index[index.len() - 1] - 1;
        Ok(v.iter().enumerate().map(|(alpha, va)| va * self.last.get(alpha, j)).sum())
    }

    /// Worst orthonormality defect of `G₁` and of each interior core's left
    /// unfolding `(r_{k−1} n_k) × r_k`.
    pub fn left_orthogonality_defect(&self) -> f64 {
        self.cores
            .iter()
            .map(|c| {
                let (r0, n, r1) = (c.shape()[0], c.shape()[1], c.shape()[2]);
                Matrix::from_parts(r0 * n, r1, c.data().to_vec()).orthonormality_defect()
            })
            .fold(self.first.orthonormality_defect(), f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct TtsvdOutput {
    pub decomposition: TtDecomposition,
    /// Frobenius norm dropped by each truncation; with the deterministic
    /// backend these are the discarded singular-value tails.
    pub discarded: Vec<f64>,
}

fn check_ranks(x: &DenseTensor, ranks: &[usize]) -> Result<()> {
    if x.order() < 2 {
        return Err(Error::InvalidShape {
            shape: x.shape().to_vec(),
            reason: "TT decomposition needs at least two modes".into(),
        });
    }
    if ranks.len() != x.order() - 1 {
        return Err(Error::RankArity {
            expected: x.order() - 1,
            got: ranks.len(),
        });
    }
    if ranks.contains(&0) {
        return Err(Error::InvalidRank("TT ranks must be at least 1".into()));
    }
    Ok(())
}

/// TTSVD: a left-to-right sweep of truncated SVDs over successive reshapes.
/// For `d = 2` this is a plain truncated SVD, `first · last`.
pub fn ttsvd(x: &DenseTensor, ranks: &[usize], strategy: &TruncationStrategy) -> Result<TtDecomposition> {
    Ok(ttsvd_detailed(x, ranks, strategy)?.decomposition)
}

pub fn ttsvd_detailed(x: &DenseTensor, ranks: &[usize], strategy: &TruncationStrategy) -> Result<TtsvdOutput> {
    ttsvd_seeded(x, ranks, strategy, 0)
}

pub(crate) fn ttsvd_seeded(
    x: &DenseTensor,
    ranks: &[usize],
    strategy: &TruncationStrategy,
    call_base: u64,
) -> Result<TtsvdOutput> {
    check_ranks(x, ranks)?;
    ttsvd_leading(x.shape(), &x.matricize(1)?, ranks, strategy, call_base)
}

/// TTSVD of the tensor of `shape` whose first matricization is `leading`.
fn ttsvd_leading(
    shape: &[usize],
    leading: &Matrix,
    ranks: &[usize],
    strategy: &TruncationStrategy,
    call_base: u64,
) -> Result<TtsvdOutput> {
    strategy.validate()?;
    let d = shape.len();
    let mut discarded = Vec::with_capacity(d - 1);
    let mut truncate = |g: &Matrix, k: usize| {
        let svd = strategy.truncate(g, ranks[k], SEED_LABEL, call_base + k as u64)?;
        let kept: f64 = svd.s.iter().map(|s| s * s).sum();
        discarded.push((g.frobenius_norm().powi(2) - kept).max(0.0).sqrt());
        Ok::<_, Error>(svd)
    };

    let svd = truncate(leading, 0)?;
    let first = svd.u.clone();
    let mut left_rank = svd.rank();
    let mut carry = svd.weighted_vt();
    let mut cores = Vec::with_capacity(d.saturating_sub(2));
    for (k, &n) in shape.iter().enumerate().take(d - 1).skip(1) {
        let rows = left_rank * n;
        let g = Matrix::from_parts(rows, carry.rows() * carry.cols() / rows, carry.into_data());
        let svd = truncate(&g, k)?;
        let r = svd.rank();
        carry = svd.weighted_vt();
        cores.push(DenseTensor::from_parts(
            vec![left_rank, n, r],
            svd.u.into_data(),
        ));
        left_rank = r;
    }
    Ok(TtsvdOutput {
        decomposition: TtDecomposition {
            first,
            cores,
            last: carry,
        },
        discarded,
    })
}

/// Alternating projections between the nonnegative orthant and the set of
/// tensors with TT rank at most `ranks`, using TTSVD as the low-rank
/// projection and full contraction to rebuild each iterate.
pub fn nttsvd(
    x: &DenseTensor,
    ranks: &[usize],
    options: &ProjectionOptions,
) -> Result<(TtDecomposition, ConvergenceTrace)> {
    check_ranks(x, ranks)?;
    options.validate()?;
    let reference = ReferenceNorms::new(x);
    let calls = ranks.len() as u64;
    let mut trace = ConvergenceTrace::default();
    let mut iterate = x.clone();
    let n1 = x.shape()[0];
    let mut elapsed = 0.0;
    let mut last = None;
    for i in 1..=options.iterations {
        let start = Instant::now();
        iterate.nonneg_project_in_place();
        let shape = iterate.shape().to_vec();
        let leading = Matrix::from_parts(n1, iterate.len() / n1, iterate.into_data());
        let out = ttsvd_leading(&shape, &leading, ranks, &options.strategy, (i as u64 - 1) * calls)?;
        let projected = out.decomposition.reconstruct();
        elapsed += start.elapsed().as_secs_f64();

        if cfg!(debug_assertions) && options.strategy == TruncationStrategy::Deterministic {
            let input = DenseTensor::from_parts(shape, leading.into_data());
            let err2 = input.sub(&projected)?.frobenius_norm().powi(2);
            let bound: f64 = out.discarded.iter().map(|t| t * t).sum();
            debug_assert!(
                err2 <= bound + 1e-9 * input.frobenius_norm().powi(2),
                "TTSVD error {err2} exceeds discarded energy {bound}"
            );
        }

        iterate = projected;
        let row = trace.record(i, &reference, &iterate, elapsed)?;
        let stop = options.should_stop(row);
        last = Some(out.decomposition);
        if stop {
            break;
        }
    }
    Ok((last.expect("at least one iteration"), trace))
}
