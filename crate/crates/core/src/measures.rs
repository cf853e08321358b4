//! Complexity measures of a sketching problem: stable rank, statistical
//! dimension, per-block coherence, and the coherence-proportional sketch-size
//! allocation.

use alloc::format;
use alloc::vec::Vec;

// Needed for sqrt/ln/etc. in no_std builds; shadowed by std's inherent
// methods when tests link std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::decomp::{jacobi_singular, qr_thin, singular_values, spectral_norm};
use crate::error::{Error, Result};
use crate::matrix::{gram, matmul, DenseMatrix};
use crate::partition::PartitionedMatrix;

/// Per-block coherence values of an orthobasis, with the block layout they
/// were measured on.
///
/// Invariants: `0 <= gamma_j <= 1` and `max_j gamma_j >= 1/J`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoherenceProfile {
    pub gammas: Vec<f64>,
    pub basis_cols: usize,
    pub block_rows: Vec<usize>,
}

impl CoherenceProfile {
    pub fn new(gammas: Vec<f64>, basis_cols: usize, block_rows: Vec<usize>) -> Result<Self> {
        if gammas.len() != block_rows.len() || gammas.is_empty() {
            return Err(Error::InvalidArgument {
                op: "CoherenceProfile::new",
                reason: format!(
                    "{} coherence values for {} blocks",
                    gammas.len(),
                    block_rows.len()
                ),
            });
        }
        let slack = 1e-9;
        if gammas.iter().any(|&g| !(-slack..=1.0 + slack).contains(&g)) {
            return Err(Error::InvalidArgument {
                op: "CoherenceProfile::new",
                reason: format!("coherence values outside [0, 1]: {gammas:?}"),
            });
        }
        let j = gammas.len() as f64;
        let max = gammas.iter().cloned().fold(0.0f64, f64::max);
        if max < 1.0 / j - slack {
            return Err(Error::InvalidArgument {
                op: "CoherenceProfile::new",
                reason: format!("max coherence {max} below 1/J = {}", 1.0 / j),
            });
        }
        let gammas = gammas.into_iter().map(|g| g.clamp(0.0, 1.0)).collect();
        Ok(Self {
            gammas,
            basis_cols,
            block_rows,
        })
    }

    pub fn num_blocks(&self) -> usize {
        self.gammas.len()
    }
}

/// Per-block sketch heights `M_j` and their total.
///
/// Built by [`allocate`] as `M_j = max(1, ceil(m0 * gamma_j))` — coherence-
/// proportional with a floor of one row so every block stays represented —
/// or by [`BlockAllocation::uniform`] for equal-size baselines.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockAllocation {
    pub m0: usize,
    pub block_sizes: Vec<usize>,
    pub total: usize,
}

impl BlockAllocation {
    /// Equal split of `m_total` over `j` blocks, remainder on the first
    /// blocks. Errors when `m_total < j` (a block would get no rows).
    pub fn uniform(m_total: usize, j: usize) -> Result<Self> {
        if j == 0 || m_total < j {
            return Err(Error::InvalidArgument {
                op: "BlockAllocation::uniform",
                reason: format!("cannot spread {m_total} sketch rows over {j} blocks"),
            });
        }
        let block_sizes = crate::partition::even_partition(m_total, j)?;
        Ok(Self {
            m0: m_total,
            block_sizes,
            total: m_total,
        })
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }
}

/// Stable rank `||W||_F^2 / ||W||_2^2`; a decay-aware surrogate for rank,
/// always in `[1, min(rows, cols)]`.
pub fn stable_rank(w: &DenseMatrix) -> Result<f64> {
    if w.is_zero() {
        return Err(Error::ZeroMatrix { op: "stable_rank" });
    }
    let spec = spectral_norm(w, 1e-12, 2000)?;
    let fro = w.frobenius_norm();
    Ok((fro / spec) * (fro / spec))
}

/// Statistical dimension `sum_i sigma_i^2 / (sigma_i^2 + lambda)`; exact
/// zeros contribute zero, so at `lambda = 0` this equals the rank.
pub fn statistical_dimension(a: &DenseMatrix, lambda: f64) -> Result<f64> {
    if lambda < 0.0 {
        return Err(Error::InvalidArgument {
            op: "statistical_dimension",
            reason: format!("lambda must be nonnegative, got {lambda}"),
        });
    }
    let sigma = singular_values(a)?;
    Ok(sd_from_singular_values(&sigma, lambda))
}

/// Same sum evaluated on an explicit spectrum.
pub fn sd_from_singular_values(sigma: &[f64], lambda: f64) -> f64 {
    sigma
        .iter()
        .map(|&s| {
            if s == 0.0 {
                0.0
            } else {
                let s2 = s * s;
                s2 / (s2 + lambda)
            }
        })
        .sum()
}

/// Orthobasis for the column space of `A`, keeping singular directions above
/// `rank_tol * sigma_max` and carrying over `A`'s block boundaries.
pub fn orthobasis(a: &PartitionedMatrix, rank_tol: f64) -> Result<PartitionedMatrix> {
    if a.total_rows() < a.cols() {
        return Err(Error::InvalidArgument {
            op: "orthobasis",
            reason: format!(
                "requires total_rows >= cols, got {}x{}",
                a.total_rows(),
                a.cols()
            ),
        });
    }
    let flat = a.flatten();
    if flat.is_zero() {
        return Err(Error::ZeroMatrix { op: "orthobasis" });
    }
    let (q, r) = qr_thin(&flat)?;
    // Left singular vectors of the small R factor rotate Q onto the
    // numerical range of A.
    let (sigma, ur) = jacobi_singular(&r, true, 40);
    let ur = ur.expect("left vectors requested");
    let cutoff = rank_tol.max(0.0) * sigma[0];
    let rank = sigma.iter().take_while(|&&s| s > cutoff).count().max(1);
    let kept: Vec<usize> = (0..rank).collect();
    let u = matmul(&q, &ur.select_columns(&kept))?;
    a.partition_like(&u)
}

/// Per-block coherence `Gamma(U_j) = min(N_j * ||U_j||_inf^2, ||U_j||_2^2)`
/// of an orthobasis. Rejects input whose Gram matrix strays from the
/// identity by more than ~1e-8.
pub fn block_coherence(u: &PartitionedMatrix) -> Result<CoherenceProfile> {
    let flat = u.flatten();
    let d = flat.cols();
    let deviation = gram(&flat)
        .sub(&DenseMatrix::identity(d))?
        .frobenius_norm();
    if deviation > 1e-8 * (d as f64).sqrt().max(1.0) {
        return Err(Error::NotOrthonormal { deviation });
    }

    let mut gammas = Vec::with_capacity(u.num_blocks());
    for block in u.blocks() {
        let inf_term = block.rows() as f64 * block.max_abs() * block.max_abs();
        let spec_term = if block.is_zero() {
            0.0
        } else {
            let s = spectral_norm(block, 1e-8, 1000)?;
            s * s
        };
        gammas.push(inf_term.min(spec_term).clamp(0.0, 1.0));
    }
    CoherenceProfile::new(gammas, d, u.block_rows())
}

/// Coherence-proportional sketch sizes: `M_j = max(1, ceil(m0 * gamma_j))`.
pub fn allocate(m0: usize, profile: &CoherenceProfile) -> Result<BlockAllocation> {
    if m0 == 0 {
        return Err(Error::InvalidArgument {
            op: "allocate",
            reason: "m0 must be at least 1".into(),
        });
    }
    let block_sizes: Vec<usize> = profile
        .gammas
        .iter()
        .map(|&g| ((m0 as f64 * g).ceil() as usize).max(1))
        .collect();
    let total = block_sizes.iter().sum();
    Ok(BlockAllocation {
        m0,
        block_sizes,
        total,
    })
}
