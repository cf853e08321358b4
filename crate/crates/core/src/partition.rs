//! Row-block partitioned matrices: the data layout of localized sketching,
//! where block `j` lives at node `j` and is only ever touched by its own
//! sketch.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// A matrix split into `J` row blocks with a shared column count.
///
/// Flattening the blocks in order reproduces the unpartitioned matrix
/// exactly; `sum(block_rows) == total_rows`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedMatrix {
    blocks: Vec<DenseMatrix>,
    cols: usize,
    total_rows: usize,
}

impl PartitionedMatrix {
    pub fn from_blocks(blocks: Vec<DenseMatrix>) -> Result<Self> {
        let Some(first) = blocks.first() else {
            return Err(Error::InvalidArgument {
                op: "PartitionedMatrix::from_blocks",
                reason: "at least one block required".into(),
            });
        };
        let cols = first.cols();
        if let Some(bad) = blocks.iter().find(|b| b.cols() != cols) {
            return Err(Error::ShapeMismatch {
                op: "PartitionedMatrix::from_blocks",
                left: (first.rows(), cols),
                right: bad.shape(),
            });
        }
        let total_rows = blocks.iter().map(|b| b.rows()).sum();
        Ok(Self {
            blocks,
            cols,
            total_rows,
        })
    }

    /// Split a dense matrix at the given block heights.
    pub fn split(dense: &DenseMatrix, block_rows: &[usize]) -> Result<Self> {
        let total: usize = block_rows.iter().sum();
        if total != dense.rows() || block_rows.iter().any(|&n| n == 0) {
            return Err(Error::InvalidArgument {
                op: "PartitionedMatrix::split",
                reason: format!(
                    "block rows {block_rows:?} do not partition {} rows",
                    dense.rows()
                ),
            });
        }
        let cols = dense.cols();
        let mut blocks = Vec::with_capacity(block_rows.len());
        let mut row = 0;
        for &n in block_rows {
            blocks.push(dense.submatrix(row, row + n, 0, cols));
            row += n;
        }
        Ok(Self {
            blocks,
            cols,
            total_rows: dense.rows(),
        })
    }

    /// Split into `j` nearly even blocks: `floor(rows / j)` each, with the
    /// remainder spread over the first blocks.
    pub fn split_even(dense: &DenseMatrix, j: usize) -> Result<Self> {
        Self::split(dense, &even_partition(dense.rows(), j)?)
    }

    /// Partition a vector as a one-column matrix with the given heights.
    pub fn from_vector(v: &[f64], block_rows: &[usize]) -> Result<Self> {
        let col = DenseMatrix::new(v.len(), 1, v.to_vec())?;
        Self::split(&col, block_rows)
    }

    #[inline]
    pub fn blocks(&self) -> &[DenseMatrix] {
        &self.blocks
    }

    #[inline]
    pub fn block(&self, j: usize) -> &DenseMatrix {
        &self.blocks[j]
    }

    #[inline]
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn total_rows(&self) -> usize {
        self.total_rows
    }

    pub fn block_rows(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.rows()).collect()
    }

    /// Concatenate blocks back into one dense matrix (exact copy).
    pub fn flatten(&self) -> DenseMatrix {
        let mut data = Vec::with_capacity(self.total_rows * self.cols);
        for b in &self.blocks {
            data.extend_from_slice(b.data());
        }
        DenseMatrix::from_vec_unchecked(self.total_rows, self.cols, data)
    }

    /// Re-split any dense matrix with this partition's block heights.
    pub fn partition_like(&self, dense: &DenseMatrix) -> Result<Self> {
        Self::split(dense, &self.block_rows())
    }
}

/// `floor(total / j)` per block with the remainder on the first blocks.
pub fn even_partition(total: usize, j: usize) -> Result<Vec<usize>> {
    if j == 0 || j > total {
        return Err(Error::InvalidArgument {
            op: "even_partition",
            reason: format!("cannot split {total} rows into {j} nonempty blocks"),
        });
    }
    let base = total / j;
    let rem = total % j;
    Ok((0..j).map(|i| base + usize::from(i < rem)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_and_flatten_roundtrip_exactly() {
        let dense = DenseMatrix::from_fn(7, 3, |i, j| (i * 3 + j) as f64 * 0.25);
        let p = PartitionedMatrix::split(&dense, &[2, 4, 1]).unwrap();
        assert_eq!(p.num_blocks(), 3);
        assert_eq!(p.block_rows(), alloc::vec![2, 4, 1]);
        assert_eq!(p.flatten(), dense);
    }

    #[test]
    fn split_rejects_bad_partition() {
        let dense = DenseMatrix::zeros(5, 2);
        assert!(PartitionedMatrix::split(&dense, &[2, 2]).is_err());
        assert!(PartitionedMatrix::split(&dense, &[5, 0]).is_err());
    }

    #[test]
    fn even_partition_spreads_remainder_over_first_blocks() {
        assert_eq!(even_partition(10, 3).unwrap(), alloc::vec![4, 3, 3]);
        assert_eq!(even_partition(9, 3).unwrap(), alloc::vec![3, 3, 3]);
        assert!(even_partition(2, 3).is_err());
    }

    #[test]
    fn mixed_column_counts_are_rejected() {
        let blocks = alloc::vec![DenseMatrix::zeros(2, 3), DenseMatrix::zeros(2, 4)];
        assert!(PartitionedMatrix::from_blocks(blocks).is_err());
    }
}
