//! Delimited-text dataset ingestion: label extraction, optional train-side
//! standardization, deterministic subsampling, and block partitioning.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use locsketch_core::partition::{even_partition, PartitionedMatrix};
use locsketch_core::random::RandomSource;
use locsketch_core::DenseMatrix;
use rand::Rng;

use crate::error::{HarnessError, Result};
use crate::fmx::read_text;

#[derive(Debug, Clone)]
pub struct DatasetOptions {
    pub label_column: usize,
    pub standardize: bool,
    /// Uniform row subsample without replacement, deterministic in the seed.
    pub subsample: Option<usize>,
    /// Partition the features into this many contiguous row blocks.
    pub blocks: Option<usize>,
    pub seed: RandomSource,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: PartitionedMatrix,
    pub labels: Vec<f64>,
    /// Original column indices of the retained feature columns (constant
    /// columns are dropped when standardizing).
    pub kept_columns: Vec<usize>,
}

pub fn load_dataset(path: &Path, opts: &DatasetOptions) -> Result<Dataset> {
    let origin = path.display().to_string();
    let raw = read_text(BufReader::new(File::open(path)?), &origin)?;
    if opts.label_column >= raw.cols() {
        return Err(HarnessError::Usage(format!(
            "label column {} out of range for {} columns",
            opts.label_column,
            raw.cols()
        )));
    }

    // Subsample rows first, so standardization statistics come from the
    // retained (train) rows only.
    let rows: Vec<usize> = match opts.subsample {
        Some(k) if k < raw.rows() => {
            if k == 0 {
                return Err(HarnessError::Usage("subsample must keep at least one row".into()));
            }
            let mut rng = opts.seed.stream(SUBSAMPLE_TAG).rng();
            let mut pool: Vec<usize> = (0..raw.rows()).collect();
            for i in 0..k {
                let j = i + rng.random_range(0..raw.rows() - i);
                pool.swap(i, j);
            }
            let mut keep = pool[..k].to_vec();
            keep.sort_unstable();
            keep
        }
        _ => (0..raw.rows()).collect(),
    };

    let n = rows.len();
    let feat_cols: Vec<usize> = (0..raw.cols()).filter(|&c| c != opts.label_column).collect();
    let labels: Vec<f64> = rows.iter().map(|&r| raw.get(r, opts.label_column)).collect();
    let mut feats = DenseMatrix::from_fn(n, feat_cols.len(), |i, j| raw.get(rows[i], feat_cols[j]));

    let mut kept_columns = feat_cols.clone();
    if opts.standardize {
        let mut keep: Vec<usize> = Vec::new();
        let mut stats: Vec<(f64, f64)> = Vec::new();
        for j in 0..feats.cols() {
            let mean = (0..n).map(|i| feats.get(i, j)).sum::<f64>() / n as f64;
            let var = (0..n)
                .map(|i| {
                    let d = feats.get(i, j) - mean;
                    d * d
                })
                .sum::<f64>()
                / (n as f64 - 1.0).max(1.0);
            if var > 1e-24 {
                keep.push(j);
                stats.push((mean, var.sqrt()));
            }
        }
        if keep.is_empty() {
            return Err(HarnessError::Usage(
                "standardization dropped every column (all constant)".into(),
            ));
        }
        kept_columns = keep.iter().map(|&j| feat_cols[j]).collect();
        feats = DenseMatrix::from_fn(n, keep.len(), |i, j| {
            let (mean, sd) = stats[j];
            (feats.get(i, keep[j]) - mean) / sd
        });
    }

    let features = match opts.blocks {
        Some(j) => PartitionedMatrix::split(&feats, &even_partition(n, j)?)?,
        None => PartitionedMatrix::from_blocks(vec![feats])?,
    };
    Ok(Dataset {
        features,
        labels,
        kept_columns,
    })
}

const SUBSAMPLE_TAG: u64 = 0x534D50;
