//! Dense tensors in row-major (last index fastest) order, together with the
//! reshaping algebra used by every decomposition: mode-k unfoldings and their
//! inverse, matricizations, mode-k products, norms and the projection onto
//! the nonnegative orthant.
//!
//! Mode numbers and element multi-indices are 1-based, matching the usual
//! mathematical notation `X(i₁,…,i_d)` and `X₍ₖ₎`. Raw storage offsets are
//! 0-based.

use faer::MatRef;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{all_finite, product, product_into, sum_sq, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

/// Size of the negative part of a tensor.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NegativityStats {
    /// `‖min(X, 0)‖_F`.
    pub frobenius: f64,
    /// Largest magnitude among negative entries, 0 if there are none.
    pub chebyshev: f64,
    /// Share of strictly negative entries, in `[0, 1]`.
    pub fraction: f64,
}

fn validate_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::InvalidShape {
            shape: shape.to_vec(),
            reason: "a tensor needs at least one mode".into(),
        });
    }
    if shape.contains(&0) {
        return Err(Error::InvalidShape {
            shape: shape.to_vec(),
            reason: "every extent must be positive".into(),
        });
    }
    shape
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| Error::InvalidShape {
            shape: shape.to_vec(),
            reason: "number of entries overflows usize".into(),
        })
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = validate_shape(&shape)?;
        if len != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "shape {shape:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        if !all_finite(&data) {
            return Err(Error::NonFinite);
        }
        Ok(Self { shape, data })
    }

    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        let len = validate_shape(shape)?;
        Ok(Self::from_parts(shape.to_vec(), vec![0.0; len]))
    }

    /// Builds a tensor by evaluating `f` at every 1-based multi-index, in
    /// storage order.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = validate_shape(shape)?;
        let mut idx = vec![1usize; shape.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            for m in (0..shape.len()).rev() {
                if idx[m] < shape[m] {
                    idx[m] += 1;
                    break;
                }
                idx[m] = 1;
            }
        }
        Self::new(shape.to_vec(), data)
    }

    /// Views a matrix as a 2-D tensor.
    pub fn from_matrix(m: Matrix) -> Self {
        let shape = vec![m.rows(), m.cols()];
        Self::from_parts(shape, m.into_data())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Number of modes `d`.
    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Storage offset of a 1-based multi-index.
    pub fn offset(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.shape.len()
            || index.iter().zip(&self.shape).any(|(&i, &n)| i == 0 || i > n)
        {
            return Err(Error::IndexOutOfBounds {
                index: index.to_vec(),
                shape: self.shape.clone(),
            });
        }
        Ok(index
            .iter()
            .zip(&self.shape)
            .fold(0usize, |acc, (&i, &n)| acc * n + (i - 1)))
    }

    /// Entry at a 1-based multi-index.
    pub fn element(&self, index: &[usize]) -> Result<f64> {
        Ok(self.data[self.offset(index)?])
    }

    /// Reinterprets the storage under a new shape with the same entry count.
    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        let len = validate_shape(&shape)?;
        if len != self.data.len() {
            return Err(Error::DimensionMismatch(format!(
                "cannot reshape {:?} into {shape:?}",
                self.shape
            )));
        }
        Ok(Self::from_parts(shape, self.data))
    }

    fn check_mode(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.order() {
            return Err(Error::ModeOutOfRange {
                mode: k,
                order: self.order(),
            });
        }
        Ok(())
    }

    /// Splits the storage around mode `k` as `(before, n_k, after)`.
    fn split(&self, k: usize) -> (usize, usize, usize) {
        split_shape(&self.shape, k)
    }

    /// Mode-`k` unfolding `X₍ₖ₎`: `n_k` rows, columns enumerate the remaining
    /// modes in their original order with the last one fastest.
    pub fn unfold(&self, k: usize) -> Result<Matrix> {
        self.check_mode(k)?;
        let (before, n, after) = self.split(k);
        if before == 1 {
            return Ok(Matrix::from_parts(n, after, self.data.clone()));
        }
        let cols = before * after;
        let mut out = vec![0.0; n * cols];
        for a in 0..before {
            for i in 0..n {
                let src = (a * n + i) * after;
                let dst = i * cols + a * after;
                out[dst..dst + after].copy_from_slice(&self.data[src..src + after]);
            }
        }
        Ok(Matrix::from_parts(n, cols, out))
    }

    /// Inverse of [`DenseTensor::unfold`].
    pub fn fold(m: &Matrix, k: usize, shape: &[usize]) -> Result<Self> {
        validate_shape(shape)?;
        if k == 0 || k > shape.len() {
            return Err(Error::ModeOutOfRange {
                mode: k,
                order: shape.len(),
            });
        }
        let (before, n, after) = split_shape(shape, k);
        if m.rows() != n || m.cols() != before * after {
            return Err(Error::DimensionMismatch(format!(
                "a {}x{} matrix cannot be folded along mode {k} into {shape:?}",
                m.rows(),
                m.cols()
            )));
        }
        if before == 1 {
            return Ok(Self::from_parts(shape.to_vec(), m.data().to_vec()));
        }
        let cols = m.cols();
        let src = m.data();
        let mut out = vec![0.0; src.len()];
        for a in 0..before {
            for i in 0..n {
                let s = i * cols + a * after;
                let d = (a * n + i) * after;
                out[d..d + after].copy_from_slice(&src[s..s + after]);
            }
        }
        Ok(Self::from_parts(shape.to_vec(), out))
    }

    /// `k`-th matricization `X₍<k>₎` of size `(n₁⋯n_k) × (n_{k+1}⋯n_d)`.
    /// A pure reshape of the row-major buffer.
    pub fn matricize(&self, k: usize) -> Result<Matrix> {
        if k == 0 || k >= self.order() {
            return Err(Error::ModeOutOfRange {
                mode: k,
                order: self.order(),
            });
        }
        let rows: usize = self.shape[..k].iter().product();
        Ok(Matrix::from_parts(
            rows,
            self.len() / rows,
            self.data.clone(),
        ))
    }

    /// Mode-`k` product `X ×ₖ U`, defined by `(X ×ₖ U)₍ₖ₎ = U X₍ₖ₎`.
    pub fn mode_product(&self, u: &Matrix, k: usize) -> Result<Self> {
        self.check_mode(k)?;
        let (before, n, after) = self.split(k);
        if u.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "factor has {} columns but mode {k} has extent {n}",
                u.cols()
            )));
        }
        let m = u.rows();
        let mut shape = self.shape.clone();
        shape[k - 1] = m;
        if after == 1 {
            // Last mode: one product X_mat · Uᵀ.
            let x = MatRef::from_row_major_slice(&self.data, before, n);
            let y = product(x, u.view().transpose());
            return Ok(Self::from_parts(shape, y.into_data()));
        }
        let mut out = vec![0.0; before * m * after];
        for a in 0..before {
            let x = MatRef::from_row_major_slice(&self.data[a * n * after..(a + 1) * n * after], n, after);
            product_into(&mut out[a * m * after..(a + 1) * m * after], u.view(), x);
        }
        Ok(Self::from_parts(shape, out))
    }

    pub fn frobenius_norm(&self) -> f64 {
        sum_sq(&self.data).sqrt()
    }

    /// Largest entry magnitude.
    pub fn chebyshev_norm(&self) -> f64 {
        self.data.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn frobenius_inner(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub(crate) fn check_same_shape(&self, other: &DenseTensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!(
                "shapes {:?} and {:?} differ",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    /// Frobenius-nearest nonnegative tensor, `max(X, 0)` entry-wise.
    pub fn nonneg_project(&self) -> Self {
        Self::from_parts(
            self.shape.clone(),
            self.data.iter().map(|&v| v.max(0.0)).collect(),
        )
    }

    pub fn nonneg_project_in_place(&mut self) {
        self.data.iter_mut().for_each(|v| *v = v.max(0.0));
    }

    pub fn negativity_stats(&self) -> NegativityStats {
        let mut sq = 0.0;
        let mut cheb = 0.0f64;
        let mut count = 0usize;
        for &v in self.data.iter().filter(|v| **v < 0.0) {
            sq += v * v;
            cheb = cheb.max(-v);
            count += 1;
        }
        NegativityStats {
            frobenius: sq.sqrt(),
            chebyshev: cheb,
            fraction: count as f64 / self.data.len() as f64,
        }
    }

    /// Entry-wise `self − other`.
    pub fn sub(&self, other: &DenseTensor) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self::from_parts(
            self.shape.clone(),
            self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        ))
    }
}

pub(crate) fn split_shape(shape: &[usize], k: usize) -> (usize, usize, usize) {
    let before = shape[..k - 1].iter().product();
    let after = shape[k..].iter().product();
    (before, shape[k - 1], after)
}
