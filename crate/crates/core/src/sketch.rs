//! Sketch operators: block-diagonal Gaussian (the localized model), dense
//! Gaussian, a subsampled fast-transform baseline, and an exact identity
//! operator for degeneration tests.
//!
//! Scaling conventions make every kind unbiased, `E[S^T S] = I`:
//! block `j` draws `N(0, 1/M_j)`, the dense operator draws `N(0, 1/M)`, and
//! the subsampled transform is `sqrt(n/m) * P * H * D`.
//!
//! Applying a block-diagonal operator touches only block `j` of the data to
//! produce output rows for block `j` and never materializes the full
//! operator; the work is `sum_j M_j * N_j * d` multiply-adds.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
// Needed for sqrt/ln/etc. in no_std builds; shadowed by std's inherent
// methods when tests link std.
#[allow(unused_imports)]
use num_traits::Float;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{matmul, matmul_into, matmul_tn, DenseMatrix};
use crate::measures::BlockAllocation;
use crate::partition::PartitionedMatrix;
use crate::random::{gaussian_matrix, RandomSource};
use crate::transform::HartleyPlan;

/// Operator family, used in descriptors and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SketchKind {
    BlockDiagonalGaussian,
    DenseGaussian,
    SubsampledFourier,
    IdentityBlocks,
}

/// A materialization-free description an operator can be rebuilt from.
/// Operators are never serialized as dense entries.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SketchDescriptor {
    pub kind: SketchKind,
    pub rows: usize,
    pub cols: usize,
    pub seed: Option<RandomSource>,
    pub allocation: Option<BlockAllocation>,
    pub block_rows: Option<Vec<usize>>,
}

/// A random sketching operator `S` (rows x cols), applied to row-partitioned
/// data. Built through [`build_block_diagonal`], [`build_dense_gaussian`],
/// [`build_subsampled_fourier`], [`identity_blocks`] or a descriptor.
#[derive(Debug, Clone)]
pub struct SketchOperator {
    repr: Repr,
}

#[derive(Debug, Clone)]
enum Repr {
    BlockDiagonalGaussian {
        blocks: Vec<DenseMatrix>,
        allocation: BlockAllocation,
        block_rows: Vec<usize>,
        seed: RandomSource,
    },
    DenseGaussian {
        matrix: DenseMatrix,
        seed: RandomSource,
    },
    SubsampledFourier {
        rows: usize,
        cols: usize,
        /// Random +-1 diagonal `D`.
        signs: Vec<f64>,
        /// Row index set of `P`, ascending, sampled without replacement.
        selected: Vec<usize>,
        plan: HartleyPlan,
        seed: RandomSource,
    },
    IdentityBlocks { block_rows: Vec<usize> },
}

/// Block-diagonal Gaussian operator: block `j` is `M_j x N_j` with entries
/// `N(0, 1/M_j)`, drawn from the substream `seed.stream(j)` so blocks are
/// independent and insensitive to build order.
pub fn build_block_diagonal(
    alloc: &BlockAllocation,
    block_rows: &[usize],
    seed: RandomSource,
) -> Result<SketchOperator> {
    if alloc.num_blocks() != block_rows.len() {
        return Err(Error::InvalidArgument {
            op: "build_block_diagonal",
            reason: format!(
                "allocation has {} blocks, data has {}",
                alloc.num_blocks(),
                block_rows.len()
            ),
        });
    }
    if block_rows.iter().any(|&n| n == 0) || alloc.block_sizes.iter().any(|&m| m == 0) {
        return Err(Error::InvalidArgument {
            op: "build_block_diagonal",
            reason: "every block needs at least one row on both sides".into(),
        });
    }
    if alloc.total != alloc.block_sizes.iter().sum::<usize>() {
        return Err(Error::InvalidArgument {
            op: "build_block_diagonal",
            reason: "allocation total disagrees with its block sizes".into(),
        });
    }
    let blocks = alloc
        .block_sizes
        .iter()
        .zip(block_rows)
        .enumerate()
        .map(|(j, (&mj, &nj))| gaussian_matrix(mj, nj, 1.0 / mj as f64, seed.stream(j as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SketchOperator {
        repr: Repr::BlockDiagonalGaussian {
            blocks,
            allocation: alloc.clone(),
            block_rows: block_rows.to_vec(),
            seed,
        },
    })
}

/// Dense Gaussian operator with entries `N(0, 1/m)`.
pub fn build_dense_gaussian(m: usize, n: usize, seed: RandomSource) -> Result<SketchOperator> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument {
            op: "build_dense_gaussian",
            reason: format!("dimensions must be positive, got {m}x{n}"),
        });
    }
    Ok(SketchOperator {
        repr: Repr::DenseGaussian {
            matrix: gaussian_matrix(m, n, 1.0 / m as f64, seed)?,
            seed,
        },
    })
}

/// Subsampled fast-transform operator `x -> sqrt(n/m) P H D x`: a random
/// sign flip, an orthonormal real trigonometric transform (Hartley,
/// `O(n log n)` apply), and `m` rows sampled uniformly without replacement.
pub fn build_subsampled_fourier(m: usize, n: usize, seed: RandomSource) -> Result<SketchOperator> {
    let plan = HartleyPlan::new(n)?;
    if m == 0 || m > n {
        return Err(Error::InvalidArgument {
            op: "build_subsampled_fourier",
            reason: format!("need 1 <= m <= n, got m={m}, n={n}"),
        });
    }
    let mut sign_rng = seed.stream(SIGN_TAG).rng();
    let signs: Vec<f64> = (0..n)
        .map(|_| if sign_rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();

    // Partial Fisher-Yates for m indices without replacement.
    let mut row_rng = seed.stream(ROW_TAG).rng();
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = i + row_rng.random_range(0..n - i);
        pool.swap(i, j);
    }
    let mut selected = pool[..m].to_vec();
    selected.sort_unstable();

    Ok(SketchOperator {
        repr: Repr::SubsampledFourier {
            rows: m,
            cols: n,
            signs,
            selected,
            plan,
            seed,
        },
    })
}

/// Exact pass-through operator with the given block structure. Applying it
/// returns the input bit-for-bit; used as the exactness baseline.
pub fn identity_blocks(block_rows: &[usize]) -> SketchOperator {
    SketchOperator {
        repr: Repr::IdentityBlocks {
            block_rows: block_rows.to_vec(),
        },
    }
}

const SIGN_TAG: u64 = 0x5349474E; // "SIGN"
const ROW_TAG: u64 = 0x524F5753; // "ROWS"

impl SketchOperator {
    pub fn kind(&self) -> SketchKind {
        match &self.repr {
            Repr::BlockDiagonalGaussian { .. } => SketchKind::BlockDiagonalGaussian,
            Repr::DenseGaussian { .. } => SketchKind::DenseGaussian,
            Repr::SubsampledFourier { .. } => SketchKind::SubsampledFourier,
            Repr::IdentityBlocks { .. } => SketchKind::IdentityBlocks,
        }
    }

    /// Output height M (total sketch rows).
    pub fn rows(&self) -> usize {
        match &self.repr {
            Repr::BlockDiagonalGaussian { allocation, .. } => allocation.total,
            Repr::DenseGaussian { matrix, .. } => matrix.rows(),
            Repr::SubsampledFourier { rows, .. } => *rows,
            Repr::IdentityBlocks { block_rows } => block_rows.iter().sum(),
        }
    }

    /// Input width N (total data rows).
    pub fn cols(&self) -> usize {
        match &self.repr {
            Repr::BlockDiagonalGaussian { block_rows, .. } => block_rows.iter().sum(),
            Repr::DenseGaussian { matrix, .. } => matrix.cols(),
            Repr::SubsampledFourier { cols, .. } => *cols,
            Repr::IdentityBlocks { block_rows } => block_rows.iter().sum(),
        }
    }

    /// Data-side block structure, for kinds that require one.
    pub fn block_structure(&self) -> Option<&[usize]> {
        match &self.repr {
            Repr::BlockDiagonalGaussian { block_rows, .. }
            | Repr::IdentityBlocks { block_rows } => Some(block_rows),
            _ => None,
        }
    }

    pub fn allocation(&self) -> Option<&BlockAllocation> {
        match &self.repr {
            Repr::BlockDiagonalGaussian { allocation, .. } => Some(allocation),
            _ => None,
        }
    }

    /// Apply `S` to partitioned data, producing the stacked sketch
    /// `[S_1 X_1; ...; S_J X_J]` (block kinds) or `S X` (global kinds).
    pub fn apply(&self, x: &PartitionedMatrix) -> Result<DenseMatrix> {
        match &self.repr {
            Repr::BlockDiagonalGaussian {
                blocks, block_rows, ..
            } => {
                check_partition(block_rows, x)?;
                let d = x.cols();
                let mut data = vec![0.0f64; self.rows() * d];
                let mut row = 0;
                for (s_j, x_j) in blocks.iter().zip(x.blocks()) {
                    let mj = s_j.rows();
                    matmul_into(s_j, x_j, &mut data[row * d..(row + mj) * d]);
                    row += mj;
                }
                Ok(DenseMatrix::from_vec_unchecked(self.rows(), d, data))
            }
            Repr::DenseGaussian { matrix, .. } => {
                check_total_rows(self, x)?;
                let (m, d) = (matrix.rows(), x.cols());
                let mut out = vec![0.0f64; m * d];
                let mut col_off = 0;
                for xb in x.blocks() {
                    let nj = xb.rows();
                    for i in 0..m {
                        let srow = &matrix.row(i)[col_off..col_off + nj];
                        let orow = &mut out[i * d..(i + 1) * d];
                        for (k, &sik) in srow.iter().enumerate() {
                            for (o, &xkj) in orow.iter_mut().zip(xb.row(k)) {
                                *o += sik * xkj;
                            }
                        }
                    }
                    col_off += nj;
                }
                Ok(DenseMatrix::from_vec_unchecked(m, d, out))
            }
            Repr::SubsampledFourier {
                rows,
                cols,
                signs,
                selected,
                plan,
                ..
            } => {
                check_total_rows(self, x)?;
                let (m, n, d) = (*rows, *cols, x.cols());
                let scale = (n as f64 / m as f64).sqrt();
                let mut out = vec![0.0f64; m * d];
                let mut buf = vec![0.0f64; n];
                let mut im = vec![0.0f64; n];
                for c in 0..d {
                    let mut pos = 0;
                    for xb in x.blocks() {
                        for i in 0..xb.rows() {
                            buf[pos] = xb.get(i, c) * signs[pos];
                            pos += 1;
                        }
                    }
                    plan.apply(&mut buf, &mut im);
                    for (r, &src) in selected.iter().enumerate() {
                        out[r * d + c] = buf[src] * scale;
                    }
                }
                Ok(DenseMatrix::from_vec_unchecked(m, d, out))
            }
            Repr::IdentityBlocks { block_rows } => {
                check_partition(block_rows, x)?;
                Ok(x.flatten())
            }
        }
    }

    /// Apply the adjoint `S^T` to a sketched matrix (rows() x p), returning
    /// a cols() x p matrix.
    pub fn apply_transpose(&self, y: &DenseMatrix) -> Result<DenseMatrix> {
        if y.rows() != self.rows() {
            return Err(Error::ShapeMismatch {
                op: "apply_transpose",
                left: (self.rows(), self.cols()),
                right: y.shape(),
            });
        }
        match &self.repr {
            Repr::BlockDiagonalGaussian { blocks, .. } => {
                let p = y.cols();
                let mut data = Vec::with_capacity(self.cols() * p);
                let mut row = 0;
                for s_j in blocks {
                    let y_j = y.submatrix(row, row + s_j.rows(), 0, p);
                    data.extend_from_slice(matmul_tn(s_j, &y_j)?.data());
                    row += s_j.rows();
                }
                Ok(DenseMatrix::from_vec_unchecked(self.cols(), p, data))
            }
            Repr::DenseGaussian { matrix, .. } => matmul_tn(matrix, y),
            Repr::SubsampledFourier {
                rows,
                cols,
                signs,
                selected,
                plan,
                ..
            } => {
                let (m, n, p) = (*rows, *cols, y.cols());
                let scale = (n as f64 / m as f64).sqrt();
                let mut out = vec![0.0f64; n * p];
                let mut buf = vec![0.0f64; n];
                let mut im = vec![0.0f64; n];
                for c in 0..p {
                    buf.fill(0.0);
                    for (r, &src) in selected.iter().enumerate() {
                        buf[src] = y.get(r, c) * scale;
                    }
                    // H is symmetric, so H^T = H.
                    plan.apply(&mut buf, &mut im);
                    for i in 0..n {
                        out[i * p + c] = buf[i] * signs[i];
                    }
                }
                Ok(DenseMatrix::from_vec_unchecked(n, p, out))
            }
            Repr::IdentityBlocks { .. } => Ok(y.clone()),
        }
    }

    /// Dense form of the operator. Test and oracle use only; `apply` never
    /// goes through this.
    pub fn materialize(&self) -> DenseMatrix {
        match &self.repr {
            Repr::BlockDiagonalGaussian { blocks, .. } => {
                let (m, n) = (self.rows(), self.cols());
                let mut out = DenseMatrix::zeros(m, n);
                let (mut ro, mut co) = (0, 0);
                for b in blocks {
                    for i in 0..b.rows() {
                        for j in 0..b.cols() {
                            out.set(ro + i, co + j, b.get(i, j));
                        }
                    }
                    ro += b.rows();
                    co += b.cols();
                }
                out
            }
            Repr::DenseGaussian { matrix, .. } => matrix.clone(),
            Repr::SubsampledFourier {
                rows,
                cols,
                signs,
                selected,
                plan,
                ..
            } => {
                let (m, n) = (*rows, *cols);
                let scale = (n as f64 / m as f64).sqrt();
                let mut out = vec![0.0f64; m * n];
                let mut buf = vec![0.0f64; n];
                let mut im = vec![0.0f64; n];
                for (r, &src) in selected.iter().enumerate() {
                    buf.fill(0.0);
                    buf[src] = 1.0;
                    // Row `src` of H via symmetry: H e_src.
                    plan.apply(&mut buf, &mut im);
                    for j in 0..n {
                        out[r * n + j] = buf[j] * signs[j] * scale;
                    }
                }
                DenseMatrix::from_vec_unchecked(m, n, out)
            }
            Repr::IdentityBlocks { .. } => DenseMatrix::identity(self.rows()),
        }
    }

    /// Reconstruction descriptor (`{kind, seed, allocation, n, m}`).
    pub fn descriptor(&self) -> SketchDescriptor {
        match &self.repr {
            Repr::BlockDiagonalGaussian {
                allocation,
                block_rows,
                seed,
                ..
            } => SketchDescriptor {
                kind: SketchKind::BlockDiagonalGaussian,
                rows: self.rows(),
                cols: self.cols(),
                seed: Some(*seed),
                allocation: Some(allocation.clone()),
                block_rows: Some(block_rows.clone()),
            },
            Repr::DenseGaussian { matrix, seed } => SketchDescriptor {
                kind: SketchKind::DenseGaussian,
                rows: matrix.rows(),
                cols: matrix.cols(),
                seed: Some(*seed),
                allocation: None,
                block_rows: None,
            },
            Repr::SubsampledFourier {
                rows, cols, seed, ..
            } => SketchDescriptor {
                kind: SketchKind::SubsampledFourier,
                rows: *rows,
                cols: *cols,
                seed: Some(*seed),
                allocation: None,
                block_rows: None,
            },
            Repr::IdentityBlocks { block_rows } => SketchDescriptor {
                kind: SketchKind::IdentityBlocks,
                rows: self.rows(),
                cols: self.cols(),
                seed: None,
                allocation: None,
                block_rows: Some(block_rows.clone()),
            },
        }
    }

    /// Rebuild an operator from its descriptor; bit-identical to the
    /// original for every kind.
    pub fn from_descriptor(desc: &SketchDescriptor) -> Result<Self> {
        let missing = |what: &str| Error::InvalidArgument {
            op: "SketchOperator::from_descriptor",
            reason: format!("descriptor missing {what}"),
        };
        match desc.kind {
            SketchKind::BlockDiagonalGaussian => build_block_diagonal(
                desc.allocation.as_ref().ok_or_else(|| missing("allocation"))?,
                desc.block_rows.as_deref().ok_or_else(|| missing("block_rows"))?,
                desc.seed.ok_or_else(|| missing("seed"))?,
            ),
            SketchKind::DenseGaussian => build_dense_gaussian(
                desc.rows,
                desc.cols,
                desc.seed.ok_or_else(|| missing("seed"))?,
            ),
            SketchKind::SubsampledFourier => build_subsampled_fourier(
                desc.rows,
                desc.cols,
                desc.seed.ok_or_else(|| missing("seed"))?,
            ),
            SketchKind::IdentityBlocks => Ok(identity_blocks(
                desc.block_rows.as_deref().ok_or_else(|| missing("block_rows"))?,
            )),
        }
    }
}

fn check_partition(block_rows: &[usize], x: &PartitionedMatrix) -> Result<()> {
    let found = x.block_rows();
    if block_rows != found.as_slice() {
        return Err(Error::PartitionMismatch {
            expected: block_rows.to_vec(),
            found,
        });
    }
    Ok(())
}

fn check_total_rows(s: &SketchOperator, x: &PartitionedMatrix) -> Result<()> {
    if s.cols() != x.total_rows() {
        return Err(Error::ShapeMismatch {
            op: "apply",
            left: (s.rows(), s.cols()),
            right: (x.total_rows(), x.cols()),
        });
    }
    Ok(())
}
