//! Property tests for the algebraic invariants the crate promises.

use proptest::prelude::*;

use locsketch_core::decomp::{qr_thin, singular_values, spectral_norm};
use locsketch_core::matrix::{gram, matmul, DenseMatrix};
use locsketch_core::measures::{
    allocate, block_coherence, orthobasis, stable_rank, statistical_dimension, CoherenceProfile,
};
use locsketch_core::partition::PartitionedMatrix;
use locsketch_core::random::{gaussian_matrix, RandomSource};
use locsketch_core::sketch::{build_block_diagonal, build_dense_gaussian};
use locsketch_core::solvers::embedding_deviation;
use locsketch_core::BlockAllocation;

fn finite_entry() -> impl Strategy<Value = f64> {
    (-10.0f64..10.0).prop_map(|v| (v * 16.0).round() / 16.0)
}

fn matrix(rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> BoxedStrategy<DenseMatrix> {
    (rows, cols)
        .prop_flat_map(|(r, c)| {
            proptest::collection::vec(finite_entry(), r * c)
                .prop_map(move |data| DenseMatrix::new(r, c, data).unwrap())
        })
        .boxed()
}

fn rel_frob_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm().max(1e-30)
}

proptest! {
    #[test]
    fn matmul_is_associative(
        a in matrix(1..5, 1..5),
        bdata in proptest::collection::vec(finite_entry(), 25),
        cdata in proptest::collection::vec(finite_entry(), 25),
        bc in 1usize..5,
        cc in 1usize..5,
    ) {
        let b = DenseMatrix::new(a.cols(), bc, bdata[..a.cols() * bc].to_vec()).unwrap();
        let c = DenseMatrix::new(bc, cc, cdata[..bc * cc].to_vec()).unwrap();
        let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
        let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
        let denom = right.frobenius_norm().max(1.0);
        prop_assert!(left.sub(&right).unwrap().frobenius_norm() <= 1e-10 * denom);
    }

    #[test]
    fn norm_sandwich_holds(a in matrix(1..8, 1..8)) {
        prop_assume!(!a.is_zero());
        let spec = spectral_norm(&a, 1e-12, 5000).unwrap();
        let fro = a.frobenius_norm();
        let rank_bound = a.rows().min(a.cols()) as f64;
        prop_assert!(spec <= fro * (1.0 + 1e-10));
        prop_assert!(fro <= rank_bound.sqrt() * spec * (1.0 + 1e-10));
    }

    #[test]
    fn qr_reconstructs_and_is_orthonormal(a in matrix(4..12, 1..5)) {
        prop_assume!(a.rows() >= a.cols());
        let (q, r) = qr_thin(&a).unwrap();
        let qr = matmul(&q, &r).unwrap();
        prop_assert!(qr.sub(&a).unwrap().frobenius_norm() <= 1e-10 * a.frobenius_norm().max(1e-6));
        let qtq = gram(&q);
        let dev = qtq.sub(&DenseMatrix::identity(a.cols())).unwrap().frobenius_norm();
        prop_assert!(dev <= 1e-10 * (a.cols() as f64).sqrt());
        for k in 0..a.cols() {
            prop_assert!(r.get(k, k) >= 0.0);
        }
    }

    #[test]
    fn singular_values_transpose_invariant(a in matrix(1..8, 1..8)) {
        let s1 = singular_values(&a).unwrap();
        let s2 = singular_values(&a.transpose()).unwrap();
        let scale = s1.first().copied().unwrap_or(0.0).max(1e-12);
        for (x, y) in s1.iter().zip(&s2) {
            prop_assert!((x - y).abs() <= 1e-10 * scale, "{x} vs {y}");
        }
    }

    #[test]
    fn stable_rank_is_scale_invariant(a in matrix(1..7, 1..7), c in 0.25f64..8.0) {
        prop_assume!(!a.is_zero());
        let base = stable_rank(&a).unwrap();
        let scaled = stable_rank(&a.scaled(c)).unwrap();
        prop_assert!((base - scaled).abs() <= 1e-8 * base);
        let negated = stable_rank(&a.scaled(-c)).unwrap();
        prop_assert!((base - negated).abs() <= 1e-8 * base);
    }

    #[test]
    fn statistical_dimension_monotone_and_rank_bounded(
        seed in 0u64..1000,
        l1 in 0.0f64..4.0,
        dl in 0.01f64..4.0,
    ) {
        let a = gaussian_matrix(10, 5, 1.0, RandomSource::from_seed(seed)).unwrap();
        let lo = statistical_dimension(&a, l1).unwrap();
        let hi = statistical_dimension(&a, l1 + dl).unwrap();
        prop_assert!(hi <= lo + 1e-12);
        prop_assert!(lo <= 5.0 + 1e-12);
    }

    #[test]
    fn coherence_profile_invariants_on_random_bases(seed in 0u64..500, j in 2usize..6) {
        let n = 12 * j;
        let g = gaussian_matrix(n, 4, 1.0, RandomSource::from_seed(seed)).unwrap();
        let (q, _) = qr_thin(&g).unwrap();
        let parts = PartitionedMatrix::split_even(&q, j).unwrap();
        let profile = block_coherence(&parts).unwrap();
        for &gam in &profile.gammas {
            prop_assert!((0.0..=1.0).contains(&gam));
        }
        let max = profile.gammas.iter().cloned().fold(0.0f64, f64::max);
        prop_assert!(max >= 1.0 / j as f64 - 1e-12);
    }

    /// Coherence of an orthobasis for the span of a column subset never
    /// exceeds the full basis coherence, blockwise.
    #[test]
    fn coherence_monotone_under_column_subsets(seed in 0u64..300) {
        let (n, d, j) = (48usize, 6usize, 4usize);
        let a = gaussian_matrix(n, d, 1.0, RandomSource::from_seed(seed)).unwrap();
        let parts = PartitionedMatrix::split_even(&a, j).unwrap();
        let full = block_coherence(&orthobasis(&parts, 1e-10).unwrap()).unwrap();

        let mut rng_state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
        let mut cols: Vec<usize> = (0..d).collect();
        for i in 0..3 {
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            let pick = i + (rng_state as usize) % (d - i);
            cols.swap(i, pick);
        }
        let sub = parts.partition_like(&parts.flatten().select_columns(&cols[..3])).unwrap();
        let subset = block_coherence(&orthobasis(&sub, 1e-10).unwrap()).unwrap();
        for (s, f) in subset.gammas.iter().zip(&full.gammas) {
            prop_assert!(s <= &(f + 1e-8), "subset {s} vs full {f}");
        }
    }

    #[test]
    fn allocate_total_bounds(
        gammas in proptest::collection::vec(0.0f64..=1.0, 2..8),
        m0 in 1usize..500,
    ) {
        let j = gammas.len();
        let mut gammas = gammas;
        // Ensure the profile invariant max >= 1/J.
        gammas[0] = gammas[0].max(1.0 / j as f64);
        let profile = CoherenceProfile::new(gammas.clone(), 3, vec![8; j]).unwrap();
        let alloc = allocate(m0, &profile).unwrap();
        let gsum: f64 = profile.gammas.iter().sum();
        let total = alloc.total as f64;
        prop_assert!(total + 1e-9 >= m0 as f64 * gsum);
        prop_assert!(total <= m0 as f64 * gsum + j as f64 + 1e-9);
        prop_assert!(alloc.block_sizes.iter().all(|&m| m >= 1));
    }

    #[test]
    fn partition_roundtrip(a in matrix(4..16, 1..5), j in 1usize..4) {
        prop_assume!(j <= a.rows());
        let parts = PartitionedMatrix::split_even(&a, j).unwrap();
        let flat = parts.flatten();
        prop_assert_eq!(flat.data(), a.data());
        let heights = parts.block_rows();
        prop_assert_eq!(heights.iter().sum::<usize>(), a.rows());
    }

    /// apply == materialize-then-multiply on small instances, all kinds.
    #[test]
    fn apply_matches_materialization(seed in 0u64..400) {
        let x = PartitionedMatrix::split_even(
            &gaussian_matrix(32, 3, 1.0, RandomSource::from_seed(seed)).unwrap(),
            4,
        )
        .unwrap();
        let alloc = BlockAllocation::uniform(7, 4).unwrap();
        let src = RandomSource::new(seed, 99);
        for s in [
            build_block_diagonal(&alloc, &x.block_rows(), src).unwrap(),
            build_dense_gaussian(7, 32, src).unwrap(),
            locsketch_core::sketch::build_subsampled_fourier(7, 32, src).unwrap(),
        ] {
            let fast = s.apply(&x).unwrap();
            let slow = matmul(&s.materialize(), &x.flatten()).unwrap();
            let denom = slow.frobenius_norm().max(1.0);
            prop_assert!(fast.sub(&slow).unwrap().frobenius_norm() <= 1e-12 * denom);
        }
    }

    /// The embedding deviation depends only on span(U): right-rotating the
    /// basis leaves it unchanged.
    #[test]
    fn embedding_deviation_rotation_invariant(seed in 0u64..200) {
        let (n, d) = (32usize, 4usize);
        let u = qr_thin(&gaussian_matrix(n, d, 1.0, RandomSource::from_seed(seed)).unwrap())
            .unwrap()
            .0;
        let rot = qr_thin(&gaussian_matrix(d, d, 1.0, RandomSource::new(seed, 5)).unwrap())
            .unwrap()
            .0;
        let u_rot = matmul(&u, &rot).unwrap();
        let parts = PartitionedMatrix::split_even(&u, 4).unwrap();
        let parts_rot = PartitionedMatrix::split_even(&u_rot, 4).unwrap();
        let s = build_dense_gaussian(10, n, RandomSource::new(seed, 9)).unwrap();
        let d1 = embedding_deviation(&s, &parts).unwrap();
        let d2 = embedding_deviation(&s, &parts_rot).unwrap();
        prop_assert!((d1 - d2).abs() <= 1e-10, "{d1} vs {d2}");
    }
}
