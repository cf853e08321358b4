//! Sketch-and-QR estimation of the per-block importance parameters, up to a
//! constant factor, without ever forming an exact orthobasis.
//!
//! Each round draws a fresh short sketch per block, stacks the per-block
//! products under the accumulated sketch, recomputes a thin QR, and watches
//! the numerical rank of `R`. Once the rank stops moving, block importances
//! are read off as `||A_j R^+||_F^2` (rank-truncated triangular solve) and
//! normalized to sum to one.
//!
//! Per round the work is `O(sum_j c * N_j * d)` for the sketches plus one QR
//! of a `(rounds * c * J) x d` matrix; nothing ever touches an N x N object.

use alloc::format;
use alloc::vec::Vec;

// Needed for sqrt/ln/etc. in no_std builds; shadowed by std's inherent
// methods when tests link std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::decomp::{jacobi_singular, qr_thin, solve_upper_from_right};
use crate::error::{Error, Result};
use crate::matrix::{matmul, DenseMatrix};
use crate::measures::orthobasis;
use crate::partition::PartitionedMatrix;
use crate::random::{gaussian_matrix, RandomSource};
use crate::sketch::build_subsampled_fourier;

/// Distribution of the per-round, per-block sketch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RoundSketch {
    Gaussian,
    /// Requires every block height to be a power of two.
    SubsampledFourier,
}

/// Tuning knobs for [`estimate_block_coherence`].
#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    /// Sketch height `c` drawn per block per round.
    pub rows_per_round: usize,
    /// Singular values of `R` above `rank_tol * sigma_max` count toward rank.
    pub rank_tol: f64,
    /// Consecutive unchanged-rank rounds required to stop.
    pub stable_rounds: usize,
    pub max_rounds: usize,
    pub sketch: RoundSketch,
    /// Stream tags per block; defaults to the block index. In a distributed
    /// deployment these are the stable node ids, so draws follow the data
    /// when blocks are relabeled.
    pub block_tags: Option<Vec<u64>>,
}

impl EstimatorConfig {
    /// Defaults for a `d`-column problem: `c = max(4, ceil(d/8))`,
    /// `rank_tol = 1e-8`, two stable rounds, Gaussian round sketches.
    pub fn for_cols(d: usize) -> Self {
        Self {
            rows_per_round: 4.max(d.div_ceil(8)),
            rank_tol: 1e-8,
            stable_rounds: 2,
            max_rounds: 32,
            sketch: RoundSketch::Gaussian,
            block_tags: None,
        }
    }

    fn validate(&self, num_blocks: usize) -> Result<()> {
        if self.rows_per_round == 0 || self.stable_rounds == 0 {
            return Err(Error::InvalidArgument {
                op: "estimate_block_coherence",
                reason: "rows_per_round and stable_rounds must be at least 1".into(),
            });
        }
        if self.max_rounds < self.stable_rounds {
            return Err(Error::InvalidArgument {
                op: "estimate_block_coherence",
                reason: format!(
                    "max_rounds {} below stable_rounds {}",
                    self.max_rounds, self.stable_rounds
                ),
            });
        }
        if let Some(tags) = &self.block_tags {
            if tags.len() != num_blocks {
                return Err(Error::InvalidArgument {
                    op: "estimate_block_coherence",
                    reason: format!("{} block tags for {} blocks", tags.len(), num_blocks),
                });
            }
        }
        Ok(())
    }
}

/// Output of the estimator: nonnegative per-block importances summing to 1.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimateResult {
    pub gammas_hat: Vec<f64>,
    pub rounds_used: usize,
    pub converged: bool,
    pub numerical_rank: usize,
}

/// Iterative sketch-and-QR estimation of normalized block importances.
pub fn estimate_block_coherence(
    a: &PartitionedMatrix,
    cfg: &EstimatorConfig,
    seed: RandomSource,
) -> Result<EstimateResult> {
    let (n_total, d, j_blocks) = (a.total_rows(), a.cols(), a.num_blocks());
    if n_total < d {
        return Err(Error::InvalidArgument {
            op: "estimate_block_coherence",
            reason: format!("requires total_rows >= cols, got {n_total}x{d}"),
        });
    }
    if a.blocks().iter().all(|b| b.is_zero()) {
        return Err(Error::ZeroMatrix {
            op: "estimate_block_coherence",
        });
    }
    cfg.validate(j_blocks)?;
    let c = cfg.rows_per_round;

    let mut acc: Vec<f64> = Vec::new(); // accumulated sketch, d columns
    let mut acc_rows = 0usize;
    let mut r_factor = DenseMatrix::zeros(d, d);
    let mut prev_rank: Option<usize> = None;
    let mut streak = 0usize;
    let mut rank = 0usize;
    let mut rounds_used = 0usize;
    let mut converged = false;

    for round in 1..=cfg.max_rounds {
        rounds_used = round;
        let round_seed = seed.stream(round as u64);
        for (j, block) in a.blocks().iter().enumerate() {
            let tag = cfg
                .block_tags
                .as_ref()
                .map_or(j as u64, |tags| tags[j]);
            let src = round_seed.stream(tag);
            let sketched = match cfg.sketch {
                RoundSketch::Gaussian => {
                    let omega = gaussian_matrix(c, block.rows(), 1.0 / c as f64, src)?;
                    matmul(&omega, block)?
                }
                RoundSketch::SubsampledFourier => {
                    let op = build_subsampled_fourier(c.min(block.rows()), block.rows(), src)?;
                    let single = PartitionedMatrix::from_blocks(alloc::vec![block.clone()])?;
                    op.apply(&single)?.scaled(1.0 / (c as f64).sqrt())
                }
            };
            acc.extend_from_slice(sketched.data());
            acc_rows += sketched.rows();
        }

        let acc_m = DenseMatrix::from_vec_unchecked(acc_rows, d, acc.clone());
        if acc_rows < d {
            // Not enough sketch height for a full QR yet; keep accumulating.
            continue;
        }
        r_factor = qr_thin(&acc_m)?.1;
        let sigma = jacobi_singular(&r_factor, false, 40).0;
        rank = if sigma[0] > 0.0 {
            sigma
                .iter()
                .take_while(|&&s| s > cfg.rank_tol * sigma[0])
                .count()
        } else {
            0
        };

        if prev_rank == Some(rank) {
            streak += 1;
        } else {
            streak = 0;
        }
        prev_rank = Some(rank);
        if streak >= cfg.stable_rounds {
            converged = true;
            break;
        }
    }

    if rank == 0 {
        return Err(Error::ZeroMatrix {
            op: "estimate_block_coherence",
        });
    }

    // Gamma_hat_j = ||A_j R^+||_F^2 with the pseudo-inverse truncated to the
    // numerical-rank leading block, so rank-deficient input cannot produce
    // infinities.
    let mut gammas_hat = Vec::with_capacity(j_blocks);
    let mut scratch = alloc::vec![0.0f64; rank];
    for block in a.blocks() {
        let mut mass = 0.0;
        for i in 0..block.rows() {
            scratch.copy_from_slice(&block.row(i)[..rank]);
            solve_upper_from_right(&mut scratch, &r_factor, rank);
            mass += scratch.iter().map(|v| v * v).sum::<f64>();
        }
        gammas_hat.push(mass);
    }
    let total: f64 = gammas_hat.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::ZeroMatrix {
            op: "estimate_block_coherence",
        });
    }
    for g in &mut gammas_hat {
        *g /= total;
    }

    Ok(EstimateResult {
        gammas_hat,
        rounds_used,
        converged,
        numerical_rank: rank,
    })
}

/// Exact normalized block importances `||U_j||_F^2 / rank`, from a full
/// orthobasis. This is the oracle the estimator is compared against.
pub fn exact_block_importance(a: &PartitionedMatrix) -> Result<Vec<f64>> {
    let u = orthobasis(a, 1e-10)?;
    let masses: Vec<f64> = u
        .blocks()
        .iter()
        .map(|b| {
            let f = b.frobenius_norm();
            f * f
        })
        .collect();
    let total: f64 = masses.iter().sum();
    Ok(masses.into_iter().map(|m| m / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::gaussian_matrix;

    #[test]
    fn orthonormal_input_recovers_block_frobenius_mass() {
        // For orthonormal A the estimate is proportional to ||A_j||_F^2;
        // finite sketches leave O(1/(c*J*rounds)) sampling noise on top.
        let g = gaussian_matrix(64, 6, 1.0, RandomSource::from_seed(2)).unwrap();
        let (q, _) = crate::decomp::qr_thin(&g).unwrap();
        let a = PartitionedMatrix::split_even(&q, 4).unwrap();
        let cfg = EstimatorConfig::for_cols(6);
        let est = estimate_block_coherence(&a, &cfg, RandomSource::from_seed(9)).unwrap();
        assert!(est.converged);
        assert_eq!(est.numerical_rank, 6);
        let expect = exact_block_importance(&a).unwrap();
        for (e, t) in est.gammas_hat.iter().zip(&expect) {
            assert!((e - t).abs() < 0.02, "estimate {e} vs exact {t}");
            assert!(*e / t > 0.85 && *e / t < 1.2, "estimate {e} vs exact {t}");
        }
    }

    #[test]
    fn canonical_embedding_puts_all_importance_in_first_block() {
        let d = 5;
        let mut data = alloc::vec![0.0; 20 * d];
        for k in 0..d {
            data[k * d + k] = 1.0;
        }
        let a = PartitionedMatrix::split(
            &DenseMatrix::new(20, d, data).unwrap(),
            &[5, 5, 5, 5],
        )
        .unwrap();
        let est = estimate_block_coherence(
            &a,
            &EstimatorConfig::for_cols(d),
            RandomSource::from_seed(3),
        )
        .unwrap();
        assert!((est.gammas_hat[0] - 1.0).abs() < 1e-9);
        for g in &est.gammas_hat[1..] {
            assert!(g.abs() < 1e-9);
        }
        let exact = exact_block_importance(&a).unwrap();
        assert!((exact[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalization_is_exact_and_nonnegative() {
        let g = gaussian_matrix(120, 8, 1.0, RandomSource::from_seed(5)).unwrap();
        let a = PartitionedMatrix::split_even(&g, 6).unwrap();
        let est = estimate_block_coherence(
            &a,
            &EstimatorConfig::for_cols(8),
            RandomSource::from_seed(6),
        )
        .unwrap();
        let sum: f64 = est.gammas_hat.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(est.gammas_hat.iter().all(|&v| v >= 0.0));

        let exact = exact_block_importance(&a).unwrap();
        let esum: f64 = exact.iter().sum();
        assert!((esum - 1.0).abs() < 1e-12);
        assert!(exact.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn zero_matrix_is_rejected() {
        let a = PartitionedMatrix::split_even(&DenseMatrix::zeros(12, 3), 3).unwrap();
        assert!(matches!(
            estimate_block_coherence(
                &a,
                &EstimatorConfig::for_cols(3),
                RandomSource::from_seed(0)
            ),
            Err(Error::ZeroMatrix { .. })
        ));
    }

    #[test]
    fn unconverged_run_still_returns_best_estimate() {
        let g = gaussian_matrix(60, 5, 1.0, RandomSource::from_seed(8)).unwrap();
        let a = PartitionedMatrix::split_even(&g, 4).unwrap();
        let mut cfg = EstimatorConfig::for_cols(5);
        cfg.stable_rounds = 2;
        cfg.max_rounds = 2; // cannot reach a streak of 2 in 2 rounds
        let est = estimate_block_coherence(&a, &cfg, RandomSource::from_seed(1)).unwrap();
        assert!(!est.converged);
        assert_eq!(est.rounds_used, 2);
        let sum: f64 = est.gammas_hat.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
}
