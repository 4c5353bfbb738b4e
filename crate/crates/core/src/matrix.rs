//! Row-major dense matrices and the handful of BLAS-3 style kernels the
//! decompositions need. Products are delegated to `faer` running sequentially,
//! so results are bitwise reproducible for a fixed input.

use faer::linalg::matmul::matmul;
use faer::{Accum, MatMut, MatRef, Par};

use crate::error::{Error, Result};

/// Dense real matrix stored row-major. Entries are addressed 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidShape {
                shape: vec![rows, cols],
                reason: "matrix extents must be positive".into(),
            });
        }
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows.saturating_mul(cols),
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub(crate) fn from_parts(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_parts(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_parts(rows, cols, data)
    }

    /// Copies a `faer` view into row-major storage.
    pub fn from_faer(m: MatRef<'_, f64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Zero-copy `faer` view of this matrix.
    pub fn view(&self) -> MatRef<'_, f64> {
        MatRef::from_row_major_slice(&self.data, self.rows, self.cols)
    }

    pub fn view_mut(&mut self) -> MatMut<'_, f64> {
        MatMut::from_row_major_slice_mut(&mut self.data, self.rows, self.cols)
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for (j, &v) in self.row(i).iter().enumerate() {
                out.data[j * self.rows + i] = v;
            }
        }
        out
    }

    /// Keeps the first `r` columns.
    pub fn leading_columns(&self, r: usize) -> Matrix {
        assert!(r <= self.cols);
        let mut data = Vec::with_capacity(self.rows * r);
        for i in 0..self.rows {
            data.extend_from_slice(&self.row(i)[..r]);
        }
        Matrix::from_parts(self.rows, r, data)
    }

    /// Keeps the first `r` rows.
    pub fn leading_rows(&self, r: usize) -> Matrix {
        assert!(r <= self.rows);
        Matrix::from_parts(r, self.cols, self.data[..r * self.cols].to_vec())
    }

    pub fn frobenius_norm(&self) -> f64 {
        sum_sq(&self.data).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }

    /// `self * rhs`.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        check_inner("A*B", self.cols, rhs.rows)?;
        Ok(product(self.view(), rhs.view()))
    }

    /// `selfᵀ * rhs`.
    pub fn t_matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        check_inner("Aᵀ*B", self.rows, rhs.rows)?;
        Ok(product(self.view().transpose(), rhs.view()))
    }

    /// `self * rhsᵀ`.
    pub fn matmul_t(&self, rhs: &Matrix) -> Result<Matrix> {
        check_inner("A*Bᵀ", self.cols, rhs.cols)?;
        Ok(product(self.view(), rhs.view().transpose()))
    }

    /// Scales row `i` by `s[i]`, i.e. `diag(s) * self`.
    pub fn scale_rows(&mut self, s: &[f64]) {
        assert_eq!(s.len(), self.rows);
        for (row, &si) in self.data.chunks_exact_mut(self.cols).zip(s) {
            row.iter_mut().for_each(|v| *v *= si);
        }
    }

    /// Scales column `j` by `s[j]`, i.e. `self * diag(s)`.
    pub fn scale_cols(&mut self, s: &[f64]) {
        assert_eq!(s.len(), self.cols);
        for row in self.data.chunks_exact_mut(self.cols) {
            row.iter_mut().zip(s).for_each(|(v, si)| *v *= si);
        }
    }

    /// Largest entry of `|selfᵀ self − I|`; zero for exactly orthonormal columns.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = product(self.view().transpose(), self.view());
        let mut worst = 0.0f64;
        for i in 0..gram.rows {
            for j in 0..gram.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram.get(i, j) - target).abs());
            }
        }
        worst
    }
}

fn check_inner(what: &str, left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch(format!(
            "{what}: inner dimensions {left} and {right} differ"
        )));
    }
    Ok(())
}

/// Dense product of two `faer` views into a fresh row-major matrix.
const LANES: usize = 8;

/// `Σ vᵢ²` with independent partial sums so the loop vectorizes.
pub(crate) fn sum_sq(v: &[f64]) -> f64 {
    let mut acc = [0.0; LANES];
    let chunks = v.chunks_exact(LANES);
    let tail: f64 = chunks.remainder().iter().map(|x| x * x).sum();
    for c in chunks {
        for (a, x) in acc.iter_mut().zip(c) {
            *a += x * x;
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// `x·0` is zero for finite `x` and NaN otherwise.
pub(crate) fn all_finite(v: &[f64]) -> bool {
    let mut acc = [0.0; LANES];
    let chunks = v.chunks_exact(LANES);
    let tail: f64 = chunks.remainder().iter().map(|x| x * 0.0).sum();
    for c in chunks {
        for (a, x) in acc.iter_mut().zip(c) {
            *a += x * 0.0;
        }
    }
    acc.iter().sum::<f64>() + tail == 0.0
}

pub(crate) fn product(lhs: MatRef<'_, f64>, rhs: MatRef<'_, f64>) -> Matrix {
    let mut out = Matrix::zeros(lhs.nrows(), rhs.ncols());
    if lhs.ncols() > 0 {
        matmul(out.view_mut(), Accum::Replace, lhs, rhs, 1.0, Par::Seq);
    }
    out
}

/// `dst ← lhs * rhs` into caller-provided row-major storage.
pub(crate) fn product_into(dst: &mut [f64], lhs: MatRef<'_, f64>, rhs: MatRef<'_, f64>) {
    let dst = MatMut::from_row_major_slice_mut(dst, lhs.nrows(), rhs.ncols());
    matmul(dst, Accum::Replace, lhs, rhs, 1.0, Par::Seq);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inconsistent_length() {
        assert!(Matrix::new(2, 3, vec![0.0; 5]).is_err());
        assert!(Matrix::new(0, 3, vec![]).is_err());
    }

    #[test]
    fn products_match_hand_computation() {
        let a = Matrix::new(2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let b = Matrix::new(3, 2, vec![7., 8., 9., 10., 11., 12.]).unwrap();
        let ab = a.matmul(&b).unwrap();
        assert_eq!(ab.data(), &[58., 64., 139., 154.]);
        let ata = a.t_matmul(&a).unwrap();
        assert_eq!(ata.shape(), (3, 3));
        assert_eq!(ata.get(0, 0), 17.0);
        assert_eq!(ata.get(1, 2), 2. * 3. + 5. * 6.);
        let aat = a.matmul_t(&a).unwrap();
        assert_eq!(aat.data(), &[14., 32., 32., 77.]);
        assert!(a.matmul(&a).is_err());
    }

    #[test]
    fn transpose_and_slicing() {
        let a = Matrix::from_fn(3, 4, |i, j| (10 * i + j) as f64);
        let t = a.transpose();
        assert_eq!(t.shape(), (4, 3));
        assert_eq!(t.get(3, 2), 23.0);
        assert_eq!(a.leading_columns(2).data(), &[0., 1., 10., 11., 20., 21.]);
        assert_eq!(a.leading_rows(1).data(), &[0., 1., 2., 3.]);
    }

    #[test]
    fn identity_is_orthonormal() {
        assert_eq!(Matrix::identity(5).orthonormality_defect(), 0.0);
    }

    #[test]
    fn diagonal_scaling() {
        let mut a = Matrix::from_fn(2, 2, |_, _| 1.0);
        a.scale_rows(&[2.0, 3.0]);
        a.scale_cols(&[1.0, 10.0]);
        assert_eq!(a.data(), &[2., 20., 3., 30.]);
    }
}
