//! Row-major dense `f64` matrices and the product kernels everything else
//! builds on.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

// Needed for sqrt/ln/etc. in no_std builds; shadowed by std's inherent
// methods when tests link std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Dense row-major matrix of 64-bit floats.
///
/// Invariants: `rows >= 1`, `cols >= 1`, `data.len() == rows * cols`, and all
/// entries are finite for matrices built through [`DenseMatrix::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Validating constructor: checks dimensions, length and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument {
                op: "DenseMatrix::new",
                reason: format!("dimensions must be positive, got {rows}x{cols}"),
            });
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument {
                op: "DenseMatrix::new",
                reason: format!(
                    "data length {} does not match {rows}x{cols}",
                    data.len()
                ),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                op: "DenseMatrix::new",
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Constructor without the finiteness scan. Panics on a length mismatch.
    /// Intended for internally produced data and test harnesses that poison
    /// entries on purpose.
    pub fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert!(rows > 0 && cols > 0, "dimensions must be positive");
        assert_eq!(data.len(), rows * cols, "data length mismatch");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_vec_unchecked(rows, cols, vec![0.0; rows * cols])
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
        Self::from_vec_unchecked(rows, cols, data)
    }

    /// A single column as an `n x 1` matrix.
    pub fn column(data: Vec<f64>) -> Result<Self> {
        let n = data.len();
        Self::new(n, 1, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
                self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, s: f64) -> DenseMatrix {
        Self::from_vec_unchecked(self.rows, self.cols, self.data.iter().map(|v| v * s).collect())
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &DenseMatrix,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<DenseMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Ok(Self::from_vec_unchecked(self.rows, self.cols, data))
    }

    /// `self + s * I`; requires a square matrix.
    pub fn add_scaled_identity(&self, s: f64) -> Result<DenseMatrix> {
        if self.rows != self.cols {
            return Err(Error::InvalidArgument {
                op: "add_scaled_identity",
                reason: format!("matrix must be square, got {}x{}", self.rows, self.cols),
            });
        }
        let mut out = self.clone();
        for i in 0..self.rows {
            out.data[i * self.cols + i] += s;
        }
        Ok(out)
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows {
            return Err(Error::ShapeMismatch {
                op: "hstack",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(Self::from_vec_unchecked(self.rows, cols, data))
    }

    /// Vertical concatenation `[self; other]`.
    pub fn vstack(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.cols {
            return Err(Error::ShapeMismatch {
                op: "vstack",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self::from_vec_unchecked(self.rows + other.rows, self.cols, data))
    }

    /// Copy of the sub-block `rows_range x cols_range`.
    pub fn submatrix(&self, row0: usize, row1: usize, col0: usize, col1: usize) -> DenseMatrix {
        assert!(row0 < row1 && row1 <= self.rows && col0 < col1 && col1 <= self.cols);
        let mut data = Vec::with_capacity((row1 - row0) * (col1 - col0));
        for i in row0..row1 {
            data.extend_from_slice(&self.row(i)[col0..col1]);
        }
        Self::from_vec_unchecked(row1 - row0, col1 - col0, data)
    }

    /// Copy of the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> DenseMatrix {
        assert!(!cols.is_empty() && cols.iter().all(|&c| c < self.cols));
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            let row = self.row(i);
            for &c in cols {
                data.push(row[c]);
            }
        }
        Self::from_vec_unchecked(self.rows, cols.len(), data)
    }
}

/// Exact dense product `A * B` with a fixed accumulation order, so results
/// are independent of thread count and repeatable bit-for-bit.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.rows {
        return Err(Error::ShapeMismatch {
            op: "matmul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut out = vec![0.0f64; m * n];
    for i in 0..m {
        let arow = a.row(i);
        let orow = &mut out[i * n..(i + 1) * n];
        for (l, &ail) in arow.iter().enumerate() {
            let brow = &b.data[l * n..(l + 1) * n];
            for (o, &blj) in orow.iter_mut().zip(brow) {
                *o += ail * blj;
            }
        }
    }
    let _ = k;
    Ok(DenseMatrix::from_vec_unchecked(m, n, out))
}

/// `A * B` accumulated into a caller-provided row-major buffer of
/// `a.rows() x b.cols()`; avoids the allocation in hot block loops.
pub(crate) fn matmul_into(a: &DenseMatrix, b: &DenseMatrix, out: &mut [f64]) {
    let (m, n) = (a.rows, b.cols);
    debug_assert_eq!(a.cols, b.rows);
    debug_assert_eq!(out.len(), m * n);
    out.fill(0.0);
    for i in 0..m {
        let arow = a.row(i);
        let orow = &mut out[i * n..(i + 1) * n];
        for (l, &ail) in arow.iter().enumerate() {
            let brow = &b.data[l * n..(l + 1) * n];
            for (o, &blj) in orow.iter_mut().zip(brow) {
                *o += ail * blj;
            }
        }
    }
}

/// `A^T * B` without materializing the transpose.
pub fn matmul_tn(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows != b.rows {
        return Err(Error::ShapeMismatch {
            op: "matmul_tn",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (k, m, n) = (a.rows, a.cols, b.cols);
    let mut out = vec![0.0f64; m * n];
    for l in 0..k {
        let arow = a.row(l);
        let brow = b.row(l);
        for (i, &ali) in arow.iter().enumerate() {
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, &blj) in orow.iter_mut().zip(brow) {
                *o += ali * blj;
            }
        }
    }
    Ok(DenseMatrix::from_vec_unchecked(m, n, out))
}

/// Gram matrix `A^T * A`, exploiting symmetry with a mirrored upper triangle.
pub fn gram(a: &DenseMatrix) -> DenseMatrix {
    let (k, n) = (a.rows, a.cols);
    let mut out = vec![0.0f64; n * n];
    for l in 0..k {
        let row = a.row(l);
        for i in 0..n {
            let ri = row[i];
            for j in i..n {
                out[i * n + j] += ri * row[j];
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            out[j * n + i] = out[i * n + j];
        }
    }
    DenseMatrix::from_vec_unchecked(n, n, out)
}

/// `A * v` for a plain vector.
pub fn matvec(a: &DenseMatrix, v: &[f64]) -> Result<Vec<f64>> {
    if a.cols != v.len() {
        return Err(Error::ShapeMismatch {
            op: "matvec",
            left: a.shape(),
            right: (v.len(), 1),
        });
    }
    Ok((0..a.rows)
        .map(|i| a.row(i).iter().zip(v).map(|(x, y)| x * y).sum())
        .collect())
}

/// Euclidean norm of a slice.
pub fn vec_norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_times_matrix_is_identity_map() {
        let b = DenseMatrix::new(3, 2, alloc::vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let i3 = DenseMatrix::identity(3);
        assert_eq!(matmul(&i3, &b).unwrap(), b);
    }

    #[test]
    fn hand_checked_product() {
        let a = DenseMatrix::new(2, 2, alloc::vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = DenseMatrix::new(2, 1, alloc::vec![1.0, 1.0]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.data(), &[3.0, 7.0]);
    }

    #[test]
    fn mismatched_shapes_are_rejected_with_both_shapes() {
        let a = DenseMatrix::zeros(2, 3);
        let b = DenseMatrix::zeros(2, 2);
        match matmul(&a, &b) {
            Err(Error::ShapeMismatch { left, right, .. }) => {
                assert_eq!(left, (2, 3));
                assert_eq!(right, (2, 2));
            }
            other => panic!("expected shape mismatch, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let r = DenseMatrix::new(1, 2, alloc::vec![1.0, f64::NAN]);
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn matmul_tn_matches_explicit_transpose() {
        let a = DenseMatrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64 * 0.5 - 2.0);
        let b = DenseMatrix::from_fn(4, 2, |i, j| (i + j) as f64);
        let direct = matmul(&a.transpose(), &b).unwrap();
        let fused = matmul_tn(&a, &b).unwrap();
        for (x, y) in direct.data().iter().zip(fused.data()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn gram_matches_product() {
        let a = DenseMatrix::from_fn(5, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let g = gram(&a);
        let direct = matmul(&a.transpose(), &a).unwrap();
        for (x, y) in g.data().iter().zip(direct.data()) {
            assert!((x - y).abs() < 1e-13);
        }
    }
}
