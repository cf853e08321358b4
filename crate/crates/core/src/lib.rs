//! Localized (block-diagonal) sketching toolkit.
//!
//! Data that lives in `J` separate row blocks — streaming windows, sensor
//! nodes, edge devices — can be compressed in place by a block-diagonal
//! random matrix, one independent sketch per block. When the per-block sketch
//! heights are chosen proportional to each block's coherence, the aggregate
//! behaves like a dense global sketch of the same total size: approximate
//! matrix products and sketched ridge regression keep their usual quality at
//! the usual total sample complexity, while no step ever touches more than
//! one block of data.
//!
//! The crate provides the dense kernels, the coherence/allocation machinery,
//! the sketch operators themselves, a distributed-friendly coherence
//! estimator, and the sketched solvers. It is `no_std` (with `alloc`): the
//! per-block sketching path has no OS dependencies, matching the setting
//! where blocks are compressed at the node that owns them. IO, file formats
//! and the experiment harness live in the companion `locsketch` crate.
//!
//! All randomness flows through [`random::RandomSource`]; every operation is
//! a pure function of its inputs, so results reproduce bit-for-bit.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod matrix;
pub mod decomp;
pub mod random;
pub mod partition;
pub mod measures;
mod transform;
pub mod sketch;
pub mod estimator;
pub mod solvers;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::{matmul, DenseMatrix};
pub use measures::{
    allocate, block_coherence, orthobasis, stable_rank, statistical_dimension, BlockAllocation,
    CoherenceProfile,
};
pub use partition::PartitionedMatrix;
pub use random::{gaussian_matrix, RandomSource};
pub use sketch::{
    build_block_diagonal, build_dense_gaussian, build_subsampled_fourier, identity_blocks,
    SketchDescriptor, SketchOperator,
};
pub use solvers::{RidgeProblem, RidgeSolution};
