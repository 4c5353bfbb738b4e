//! Fixtures shared by the benchmark targets.

use nnta::data::hilbert_tensor;
use nnta::{DenseTensor, Matrix};

/// `n × n × n` Hilbert tensor.
pub fn hilbert_cube(n: usize) -> DenseTensor {
    hilbert_tensor(&[n, n, n]).expect("valid shape")
}

/// Mode-1 unfolding of the `n³` Hilbert tensor, an `n × n²` matrix.
pub fn hilbert_unfolding(n: usize) -> Matrix {
    hilbert_cube(n).unfold(1).expect("mode 1 exists")
}
