//! Consensus alternating-projection baseline (NLRT) for Tucker-rank
//! constrained nonnegative approximation.
//!
//! The iterate is a tuple `(X₁,…,X_d)` of full tensors. One sweep projects
//! onto `Ω₁` (all components equal and nonnegative) and then onto `Ω₂`
//! (component `k` has a mode-`k` unfolding of rank at most `r_k`). Both
//! projections are exact:
//!
//! * `Ω₁`: minimizing `Σₖ ‖Xₖ − Y‖²_F` over `Y ≥ 0` gives `Y = max(mean, 0)`;
//! * `Ω₂`: a truncated SVD of each unfolding, independently.
//!
//! NLRT never forms a Tucker decomposition; [`nlrt_auxiliary`] builds one
//! from the final state for reporting.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::sketch::{truncated_svd, TruncationStrategy};
use crate::tensor::DenseTensor;
use crate::trace::{ConvergenceTrace, ReferenceNorms};
use crate::tucker::{sthosvd, TuckerDecomposition};

#[derive(Debug, Clone, PartialEq)]
pub struct NlrtState {
    pub components: Vec<DenseTensor>,
    pub ranks: Vec<usize>,
}

impl NlrtState {
    /// Consensus start: every component is a copy of `x`.
    pub fn from_tensor(x: &DenseTensor, ranks: &[usize]) -> Result<Self> {
        if ranks.len() != x.order() {
            return Err(Error::RankArity {
                expected: x.order(),
                got: ranks.len(),
            });
        }
        if ranks.contains(&0) {
            return Err(Error::InvalidRank("Tucker ranks must be at least 1".into()));
        }
        Ok(Self {
            components: vec![x.clone(); x.order()],
            ranks: ranks.to_vec(),
        })
    }

    fn validate(&self) -> Result<()> {
        let first = self
            .components
            .first()
            .ok_or_else(|| Error::InvalidArgument("NLRT state has no components".into()))?;
        if self.components.len() != first.order() || self.ranks.len() != first.order() {
            return Err(Error::RankArity {
                expected: first.order(),
                got: self.components.len().min(self.ranks.len()),
            });
        }
        for c in &self.components[1..] {
            first.check_same_shape(c)?;
        }
        Ok(())
    }

    /// Average of the components after projecting each onto the orthant.
    pub fn nonnegative_mean(&self) -> DenseTensor {
        self.mean_with(|v| v.max(0.0))
    }

    fn mean_with(&self, f: impl Fn(f64) -> f64) -> DenseTensor {
        let d = self.components.len() as f64;
        let mut acc = vec![0.0; self.components[0].len()];
        for c in &self.components {
            acc.iter_mut().zip(c.data()).for_each(|(a, &v)| *a += f(v));
        }
        acc.iter_mut().for_each(|a| *a /= d);
        DenseTensor::from_parts(self.components[0].shape().to_vec(), acc)
    }
}

/// Projection onto `Ω₁`: the common nonnegative consensus tensor.
pub fn consensus_projection(state: &NlrtState) -> DenseTensor {
    let mut y = state.mean_with(|v| v);
    y.nonneg_project_in_place();
    y
}

/// Runs `iterations` NLRT sweeps. Each component gets its own trace,
/// evaluated after the `Ω₂` step against `reference`. The recorded time
/// covers the projections only.
pub fn nlrt_iterate(
    reference: &DenseTensor,
    mut state: NlrtState,
    iterations: usize,
) -> Result<(NlrtState, Vec<ConvergenceTrace>)> {
    state.validate()?;
    if iterations == 0 {
        return Err(Error::InvalidArgument("iteration count must be at least 1".into()));
    }
    let norms = ReferenceNorms::new(reference);
    let d = state.components.len();
    let mut traces = vec![ConvergenceTrace::default(); d];
    let mut elapsed = 0.0;
    for i in 1..=iterations {
        let start = Instant::now();
        let y = consensus_projection(&state);
        for (k, component) in state.components.iter_mut().enumerate() {
            let mode = k + 1;
            let svd = truncated_svd(&y.unfold(mode)?, state.ranks[k])?;
            *component = DenseTensor::fold(&svd.reconstruct(), mode, y.shape())?;
        }
        elapsed += start.elapsed().as_secs_f64();
        for (trace, component) in traces.iter_mut().zip(&state.components) {
            trace.record(i, &norms, component, elapsed)?;
        }
    }
    Ok((state, traces))
}

/// Deterministic STHOSVD of the averaged nonnegative parts of the
/// components, at the state's target ranks.
pub fn nlrt_auxiliary(state: &NlrtState) -> Result<TuckerDecomposition> {
    state.validate()?;
    sthosvd(&state.nonnegative_mean(), &state.ranks, &TruncationStrategy::Deterministic)
}
