//! Synthetic problem generation with a controlled spectrum and controlled
//! block coherence.

use alloc::format;
use alloc::vec::Vec;

use crate::decomp::qr_thin;
use crate::error::{Error, Result};
use crate::matrix::{matmul, matvec};
use crate::partition::{even_partition, PartitionedMatrix};
use crate::random::{gaussian_matrix, gaussian_vector, RandomSource};

/// Either an explicit spectrum or a (statistical dimension, lambda, rank)
/// target to be solved for.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SpectrumSpec {
    Explicit(Vec<f64>),
    Designed {
        target_sd: f64,
        lambda: f64,
        rank: usize,
    },
}

/// How coherent the generated left basis is.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CoherenceMode {
    /// QR of a Gaussian matrix: block coherences all near 1/J.
    Incoherent,
    /// Blend `strength * C + (1 - strength) * Q_rand` where `C` aligns the
    /// basis with the standard directions inside one block, then
    /// re-orthonormalize; the planted block ends up with elevated coherence.
    Planted { block: usize, strength: f64 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyntheticSpec {
    pub n_total: usize,
    pub blocks: usize,
    pub cols: usize,
    pub spectrum: SpectrumSpec,
    pub coherence: CoherenceMode,
    pub noise_sigma: f64,
    pub seed: RandomSource,
}

/// Generated problem: partitioned data, labels, and the planted coefficient
/// vector behind them.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub a: PartitionedMatrix,
    pub b: Vec<f64>,
    pub x_true: Vec<f64>,
}

/// Geometric spectrum `sigma_i = rho^(i-1)` (with `sigma_1 = 1`) whose ratio
/// `rho` is found by bisection so the statistical dimension at `lambda` hits
/// `target_sd` to 1e-6.
///
/// At `lambda = 0` every positive spectrum has statistical dimension exactly
/// `rank`; by convention a flat spectrum is returned when the target equals
/// the rank, and anything else is infeasible.
pub fn design_spectrum(target_sd: f64, lambda: f64, rank: usize) -> Result<Vec<f64>> {
    if rank == 0 {
        return Err(Error::InvalidArgument {
            op: "design_spectrum",
            reason: "rank must be at least 1".into(),
        });
    }
    if !(target_sd > 0.0) || target_sd > rank as f64 {
        return Err(Error::InvalidArgument {
            op: "design_spectrum",
            reason: format!("target_sd must lie in (0, rank]; got {target_sd} for rank {rank}"),
        });
    }
    if lambda < 0.0 {
        return Err(Error::InvalidArgument {
            op: "design_spectrum",
            reason: format!("lambda must be nonnegative, got {lambda}"),
        });
    }
    if lambda == 0.0 {
        if (target_sd - rank as f64).abs() <= 1e-9 {
            return Ok(alloc::vec![1.0; rank]);
        }
        return Err(Error::InvalidArgument {
            op: "design_spectrum",
            reason: format!(
                "at lambda = 0 the statistical dimension is exactly rank = {rank}; \
                 target {target_sd} is infeasible"
            ),
        });
    }

    let sd_of = |rho: f64| -> f64 {
        let mut sigma = 1.0f64;
        let mut total = 0.0;
        for _ in 0..rank {
            let s2 = sigma * sigma;
            total += s2 / (s2 + lambda);
            sigma *= rho;
        }
        total
    };

    let (mut lo, mut hi) = (1e-12f64, 1.0f64);
    let (sd_lo, sd_hi) = (sd_of(lo), sd_of(hi));
    if target_sd <= sd_lo || target_sd > sd_hi {
        return Err(Error::InvalidArgument {
            op: "design_spectrum",
            reason: format!(
                "target_sd {target_sd} infeasible for rank {rank} at lambda {lambda}; \
                 feasible interval is ({sd_lo:.6}, {sd_hi:.6}]"
            ),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = sd_of(mid);
        if (v - target_sd).abs() <= 1e-9 {
            lo = mid;
            hi = mid;
            break;
        }
        if v < target_sd {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let rho = 0.5 * (lo + hi);
    let mut spectrum = Vec::with_capacity(rank);
    let mut sigma = 1.0;
    for _ in 0..rank {
        spectrum.push(sigma);
        sigma *= rho;
    }
    Ok(spectrum)
}

/// Generate `A = U diag(sigma) V^T` with the requested coherence profile,
/// plus `b = A x_true + noise`.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    let (n, d, j) = (spec.n_total, spec.cols, spec.blocks);
    let sigma = match &spec.spectrum {
        SpectrumSpec::Explicit(s) => {
            if s.is_empty()
                || s.iter().any(|v| !(v.is_finite() && *v > 0.0))
                || s.windows(2).any(|w| w[0] < w[1])
            {
                return Err(Error::InvalidArgument {
                    op: "generate",
                    reason: "explicit spectrum must be positive and descending".into(),
                });
            }
            s.clone()
        }
        SpectrumSpec::Designed {
            target_sd,
            lambda,
            rank,
        } => design_spectrum(*target_sd, *lambda, *rank)?,
    };
    let rank = sigma.len();
    if rank > n.min(d) {
        return Err(Error::InvalidArgument {
            op: "generate",
            reason: format!("rank {rank} exceeds min({n}, {d})"),
        });
    }
    let block_rows = even_partition(n, j)?;

    let u = match spec.coherence {
        CoherenceMode::Incoherent => {
            let g = gaussian_matrix(n, rank, 1.0, spec.seed.stream(TAG_U))?;
            qr_thin(&g)?.0
        }
        CoherenceMode::Planted { block, strength } => {
            if block >= j {
                return Err(Error::InvalidArgument {
                    op: "generate",
                    reason: format!("planted block {block} out of range for J = {j}"),
                });
            }
            if !(0.0..=1.0).contains(&strength) {
                return Err(Error::InvalidArgument {
                    op: "generate",
                    reason: format!("planted strength must be in [0, 1], got {strength}"),
                });
            }
            if rank > block_rows[block] {
                return Err(Error::InvalidArgument {
                    op: "generate",
                    reason: format!(
                        "planted block has {} rows, fewer than rank {rank}",
                        block_rows[block]
                    ),
                });
            }
            let offset: usize = block_rows[..block].iter().sum();
            let g = gaussian_matrix(n, rank, 1.0, spec.seed.stream(TAG_U))?;
            let q_rand = qr_thin(&g)?.0;
            let mut blend = q_rand.scaled(1.0 - strength);
            for i in 0..rank {
                let v = blend.get(offset + i, i) + strength;
                blend.set(offset + i, i, v);
            }
            qr_thin(&blend)?.0
        }
    };

    let v = qr_thin(&gaussian_matrix(d, rank, 1.0, spec.seed.stream(TAG_V))?)?.0;

    // U diag(sigma) V^T, scaling U's columns in place.
    let mut us = u;
    for i in 0..n {
        let row = &mut us.data_mut()[i * rank..(i + 1) * rank];
        for (x, s) in row.iter_mut().zip(&sigma) {
            *x *= s;
        }
    }
    let a = matmul(&us, &v.transpose())?;

    let x_true = gaussian_vector(d, 1.0, spec.seed.stream(TAG_X))?;
    let mut b = matvec(&a, &x_true)?;
    if spec.noise_sigma != 0.0 {
        let noise = gaussian_vector(
            n,
            spec.noise_sigma * spec.noise_sigma,
            spec.seed.stream(TAG_NOISE),
        )?;
        for (bi, ni) in b.iter_mut().zip(&noise) {
            *bi += ni;
        }
    }

    Ok(SyntheticData {
        a: PartitionedMatrix::split(&a, &block_rows)?,
        b,
        x_true,
    })
}

const TAG_U: u64 = 0x55;
const TAG_V: u64 = 0x56;
const TAG_X: u64 = 0x58;
const TAG_NOISE: u64 = 0x4E;
