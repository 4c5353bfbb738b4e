use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sketch::TruncationStrategy;
use crate::tensor::{DenseTensor, NegativityStats};

/// Metrics of one alternating-projection iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub negativity: NegativityStats,
    pub rel_err_frobenius: f64,
    pub rel_err_chebyshev: f64,
    /// Cumulative wall-clock time of the projection steps, metric evaluation
    /// excluded.
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Row for a 1-based iteration number.
    pub fn iteration(&self, i: usize) -> Option<&TraceRow> {
        self.rows.iter().find(|r| r.iteration == i)
    }

    /// Wall time of each individual iteration.
    pub fn iteration_times(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.rows
            .iter()
            .map(|r| {
                let dt = r.elapsed_s - prev;
                prev = r.elapsed_s;
                dt
            })
            .collect()
    }

    pub(crate) fn record(
        &mut self,
        iteration: usize,
        reference: &ReferenceNorms<'_>,
        iterate: &DenseTensor,
        elapsed_s: f64,
    ) -> Result<&TraceRow> {
        let (fro, cheb) = reference.relative_errors(iterate)?;
        self.rows.push(TraceRow {
            iteration,
            negativity: iterate.negativity_stats(),
            rel_err_frobenius: fro,
            rel_err_chebyshev: cheb,
            elapsed_s,
        });
        Ok(self.rows.last().expect("just pushed"))
    }
}

/// Original tensor with its norms cached for repeated relative-error
/// evaluation.
pub(crate) struct ReferenceNorms<'a> {
    tensor: &'a DenseTensor,
    frobenius: f64,
    chebyshev: f64,
}

impl<'a> ReferenceNorms<'a> {
    pub(crate) fn new(tensor: &'a DenseTensor) -> Self {
        Self {
            tensor,
            frobenius: tensor.frobenius_norm(),
            chebyshev: tensor.chebyshev_norm(),
        }
    }

    pub(crate) fn relative_errors(&self, y: &DenseTensor) -> Result<(f64, f64)> {
        self.tensor.check_same_shape(y)?;
        if self.frobenius == 0.0 {
            return Err(Error::ZeroNorm("Frobenius"));
        }
        let mut sq = 0.0;
        let mut cheb = 0.0f64;
        for (a, b) in self.tensor.data().iter().zip(y.data()) {
            let d = a - b;
            sq += d * d;
            cheb = cheb.max(d.abs());
        }
        Ok((sq.sqrt() / self.frobenius, cheb / self.chebyshev))
    }
}

/// Settings shared by the alternating-projection solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionOptions {
    /// Number of alternating-projection sweeps, at least 1.
    pub iterations: usize,
    pub strategy: TruncationStrategy,
    /// Stop as soon as the negative part of the low-rank iterate has
    /// Frobenius norm below this value. Off by default.
    pub stop_below: Option<f64>,
}

impl ProjectionOptions {
    pub fn new(iterations: usize, strategy: TruncationStrategy) -> Self {
        Self {
            iterations,
            strategy,
            stop_below: None,
        }
    }

    pub fn stop_below(mut self, tolerance: f64) -> Self {
        self.stop_below = Some(tolerance);
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iteration count must be at least 1".into()));
        }
        self.strategy.validate()
    }

    pub(crate) fn should_stop(&self, row: &TraceRow) -> bool {
        self.stop_below
            .is_some_and(|tol| row.negativity.frobenius < tol)
    }
}
