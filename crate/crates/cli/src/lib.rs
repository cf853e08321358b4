//! Experiment harness for localized sketching: matrix file formats, dataset
//! ingestion, the sweep/phase/bench experiments, and their record formats.
//! The numeric core lives in `locsketch-core` and is re-exported as
//! [`core`].

pub use locsketch_core as core;

pub mod dataset;
pub mod error;
pub mod experiments;
pub mod fmx;
pub mod records;

pub use error::HarnessError;
