//! Nonnegative low-rank approximation of dense tensors.
//!
//! Low-rank approximations computed by STHOSVD (Tucker format) or TTSVD
//! (tensor-train format) usually contain negative entries even when the data
//! are nonnegative. The solvers here alternate between the projection onto
//! the nonnegative orthant, `max(X, 0)`, and a quasi-optimal low-rank
//! projection, which drives the negative part of the low-rank iterate towards
//! zero while keeping the approximation error close to that of the plain
//! decomposition. The low-rank projection can use a full SVD or one of two
//! randomized sketching SVDs, which lowers the per-iteration cost from
//! `O(n^{d+1})` to `O(n^d k)`.
//!
//! ```
//! use nnta::{data::hilbert_tensor, tucker, ProjectionOptions, TruncationStrategy};
//!
//! let x = hilbert_tensor(&[16, 16, 16]).unwrap();
//! let opts = ProjectionOptions::new(5, TruncationStrategy::Hmt { power: 1, sketch: 8, seed: 7 });
//! let (decomposition, trace) = tucker::nsthosvd(&x, &[3, 2, 4], &opts).unwrap();
//! assert_eq!(decomposition.ranks(), &[3, 2, 4]);
//! assert_eq!(trace.len(), 5);
//! ```
//!
//! Mode numbers (`k` in `X₍ₖ₎`, `×ₖ`) and element multi-indices are
//! 1-based throughout the public API.

pub mod data;
pub mod error;
pub mod matrix;
pub mod metrics;
pub mod nlrt;
pub mod sketch;
pub mod tensor;
pub mod trace;
pub mod tt;
pub mod tucker;

pub use error::{Error, FormatError, Result};
pub use matrix::Matrix;
pub use metrics::QualityReport;
pub use nlrt::NlrtState;
pub use sketch::{TruncatedSvd, TruncationStrategy};
pub use tensor::{DenseTensor, NegativityStats};
pub use trace::{ConvergenceTrace, ProjectionOptions, TraceRow};
pub use tt::TtDecomposition;
pub use tucker::TuckerDecomposition;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
