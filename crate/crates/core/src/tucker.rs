//! Tucker format: sequentially truncated HOSVD, reconstruction, single-entry
//! evaluation, and the alternating-projection solver that alternates
//! `max(·, 0)` with an STHOSVD projection.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::sketch::TruncationStrategy;
use crate::tensor::DenseTensor;
use crate::trace::{ConvergenceTrace, ProjectionOptions, ReferenceNorms};

const SEED_LABEL: &str = "sthosvd";

/// `X = G ×₁ U₁ ×₂ … ×_d U_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerDecomposition {
    pub core: DenseTensor,
    /// Factor `k` is `n_k × r_k`.
    pub factors: Vec<Matrix>,
}

impl TuckerDecomposition {
    pub fn new(core: DenseTensor, factors: Vec<Matrix>) -> Result<Self> {
        if factors.len() != core.order() {
            return Err(Error::RankArity {
                expected: core.order(),
                got: factors.len(),
            });
        }
        for (k, (u, &r)) in factors.iter().zip(core.shape()).enumerate() {
            if u.cols() != r {
                return Err(Error::DimensionMismatch(format!(
                    "factor {} has {} columns but core extent is {r}",
                    k + 1,
                    u.cols()
                )));
            }
        }
        Ok(Self { core, factors })
    }

    pub fn ranks(&self) -> &[usize] {
        self.core.shape()
    }

    /// Shape of the represented full tensor.
    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(Matrix::rows).collect()
    }

    /// Full tensor by a chain of mode products.
    pub fn reconstruct(&self) -> DenseTensor {
        self.factors
            .iter()
            .enumerate()
            .fold(self.core.clone(), |acc, (k, u)| {
                acc.mode_product(u, k + 1).expect("validated factor shapes")
            })
    }

    /// Single entry at a 1-based multi-index without forming the full tensor.
    pub fn element(&self, index: &[usize]) -> Result<f64> {
        let shape = self.shape();
        if index.len() != shape.len() || index.iter().zip(&shape).any(|(&i, &n)| i == 0 || i > n) {
            return Err(Error::IndexOutOfBounds {
                index: index.to_vec(),
                shape,
            });
        }
        // Contract the core with one factor row per mode, last mode first.
        let mut cur = self.core.data().to_vec();
        for k in (0..self.factors.len()).rev() {
            let row = self.factors[k].row(index[k] - 1);
            cur = cur
                .chunks_exact(row.len())
                .map(|chunk| chunk.iter().zip(row).map(|(a, b)| a * b).sum())
                .collect();
        }
        Ok(cur[0])
    }

    /// Worst orthonormality defect over all factors.
    pub fn orthonormality_defect(&self) -> f64 {
        self.factors
            .iter()
            .map(Matrix::orthonormality_defect)
            .fold(0.0, f64::max)
    }
}

/// STHOSVD together with the Frobenius norm discarded at each mode.
#[derive(Debug, Clone)]
pub struct SthosvdOutput {
    pub decomposition: TuckerDecomposition,
    /// `‖G₍ₖ₎‖_F² − Σᵢ σᵢ²` over the kept triplets, square-rooted. With the
    /// deterministic backend these are the discarded singular-value tails of
    /// the intermediate unfoldings.
    pub discarded: Vec<f64>,
}

fn check_ranks(x: &DenseTensor, ranks: &[usize]) -> Result<()> {
    if ranks.len() != x.order() {
        return Err(Error::RankArity {
            expected: x.order(),
            got: ranks.len(),
        });
    }
    if ranks.contains(&0) {
        return Err(Error::InvalidRank("Tucker ranks must be at least 1".into()));
    }
    Ok(())
}

/// Sequentially truncated HOSVD with modes processed in ascending order.
/// Each rank is clamped to the dimensions of the unfolding it truncates.
pub fn sthosvd(x: &DenseTensor, ranks: &[usize], strategy: &TruncationStrategy) -> Result<TuckerDecomposition> {
    Ok(sthosvd_detailed(x, ranks, strategy)?.decomposition)
}

pub fn sthosvd_detailed(x: &DenseTensor, ranks: &[usize], strategy: &TruncationStrategy) -> Result<SthosvdOutput> {
    sthosvd_seeded(x, ranks, strategy, 0)
}

/// Randomized backends key mode `k` to call index `call_base + k − 1`.
pub(crate) fn sthosvd_seeded(
    x: &DenseTensor,
    ranks: &[usize],
    strategy: &TruncationStrategy,
    call_base: u64,
) -> Result<SthosvdOutput> {
    check_ranks(x, ranks)?;
    sthosvd_leading(x.shape(), &x.unfold(1)?, ranks, strategy, call_base)
}

/// STHOSVD of the tensor of `shape` whose mode-1 unfolding is `leading`.
fn sthosvd_leading(
    shape: &[usize],
    leading: &Matrix,
    ranks: &[usize],
    strategy: &TruncationStrategy,
    call_base: u64,
) -> Result<SthosvdOutput> {
    strategy.validate()?;
    let mut shape = shape.to_vec();
    let mut g: Option<DenseTensor> = None;
    let mut factors = Vec::with_capacity(ranks.len());
    let mut discarded = Vec::with_capacity(ranks.len());
    for (k, &r) in ranks.iter().enumerate() {
        let mode = k + 1;
        let owned;
        let unfolded = match &g {
            None => leading,
            Some(t) => {
                owned = t.unfold(mode)?;
                &owned
            }
        };
        let svd = strategy.truncate(unfolded, r, SEED_LABEL, call_base + k as u64)?;
        let total = unfolded.frobenius_norm().powi(2);
        let kept: f64 = svd.s.iter().map(|s| s * s).sum();
        discarded.push((total - kept).max(0.0).sqrt());

        shape[k] = svd.rank();
        g = Some(DenseTensor::fold(&svd.weighted_vt(), mode, &shape)?);
        factors.push(svd.u);
    }
    Ok(SthosvdOutput {
        decomposition: TuckerDecomposition {
            core: g.expect("a tensor has at least one mode"),
            factors,
        },
        discarded,
    })
}

/// Alternating projections between the nonnegative orthant and the set of
/// tensors with Tucker rank at most `ranks`, using STHOSVD as the low-rank
/// projection.
///
/// Every sweep projects onto the orthant (the input included), truncates,
/// and reconstructs. One trace row per sweep is recorded on the low-rank
/// iterate. Returns the last decomposition.
pub fn nsthosvd(
    x: &DenseTensor,
    ranks: &[usize],
    options: &ProjectionOptions,
) -> Result<(TuckerDecomposition, ConvergenceTrace)> {
    check_ranks(x, ranks)?;
    options.validate()?;
    let reference = ReferenceNorms::new(x);
    let d = x.order() as u64;
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
        let out = sthosvd_leading(&shape, &leading, ranks, &options.strategy, (i as u64 - 1) * d)?;
        let projected = out.decomposition.reconstruct();
        elapsed += start.elapsed().as_secs_f64();

        if cfg!(debug_assertions) && options.strategy == TruncationStrategy::Deterministic {
            let input = DenseTensor::from_parts(shape, leading.into_data());
            let err2 = input.sub(&projected)?.frobenius_norm().powi(2);
            let bound: f64 = out.discarded.iter().map(|t| t * t).sum();
            debug_assert!(
                err2 <= bound + 1e-9 * input.frobenius_norm().powi(2),
                "STHOSVD error {err2} exceeds discarded energy {bound}"
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
