//! Matrix files.
//!
//! Binary "fmx": a 16-byte header — magic `FMX1`, `u32` rows, `u32` cols,
//! `u32` reserved (zero), all little-endian — followed by `rows * cols`
//! little-endian `f64` values, row-major. Delimited text (comma or
//! whitespace) is supported for interop; readers sniff the magic to pick the
//! format.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use locsketch_core::DenseMatrix;

use crate::error::{HarnessError, Result};

const MAGIC: &[u8; 4] = b"FMX1";

pub fn write_fmx<W: Write>(mut w: W, m: &DenseMatrix) -> Result<()> {
    let rows = u32::try_from(m.rows())
        .map_err(|_| HarnessError::Usage(format!("{} rows exceed fmx limit", m.rows())))?;
    let cols = u32::try_from(m.cols())
        .map_err(|_| HarnessError::Usage(format!("{} cols exceed fmx limit", m.cols())))?;
    w.write_all(MAGIC)?;
    w.write_all(&rows.to_le_bytes())?;
    w.write_all(&cols.to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    let mut buf = Vec::with_capacity(m.data().len() * 8);
    for v in m.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_fmx<R: Read>(mut r: R, origin: &str) -> Result<DenseMatrix> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[0..4] != MAGIC {
        return Err(HarnessError::Parse {
            path: origin.to_string(),
            line: 0,
            message: "bad magic, not an fmx file".into(),
        });
    }
    let rows = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let mut payload = vec![0u8; rows * cols * 8];
    r.read_exact(&mut payload)?;
    let data: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(DenseMatrix::new(rows, cols, data)?)
}

pub fn write_fmx_path(path: &Path, m: &DenseMatrix) -> Result<()> {
    write_fmx(BufWriter::new(File::create(path)?), m)
}

/// Delimited text: one row per line, values separated by commas or
/// whitespace; `{}` formatting round-trips f64 exactly.
pub fn write_text<W: Write>(mut w: W, m: &DenseMatrix) -> Result<()> {
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn write_text_path(path: &Path, m: &DenseMatrix) -> Result<()> {
    write_text(BufWriter::new(File::create(path)?), m)
}

/// Parse delimited text; ragged rows and non-numeric cells are reported
/// with their 1-based line number.
pub fn read_text<R: BufRead>(r: R, origin: &str) -> Result<DenseMatrix> {
    let mut data: Vec<f64> = Vec::new();
    let mut cols: Option<usize> = None;
    let mut rows = 0usize;
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = if trimmed.contains(',') {
            trimmed.split(',').map(str::trim).collect()
        } else {
            trimmed.split_whitespace().collect()
        };
        match cols {
            None => cols = Some(fields.len()),
            Some(c) if c != fields.len() => {
                return Err(HarnessError::Parse {
                    path: origin.to_string(),
                    line: idx + 1,
                    message: format!("ragged row: {} fields, expected {c}", fields.len()),
                });
            }
            _ => {}
        }
        for f in fields {
            let v: f64 = f.parse().map_err(|_| HarnessError::Parse {
                path: origin.to_string(),
                line: idx + 1,
                message: format!("non-numeric cell {f:?}"),
            })?;
            data.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| HarnessError::Parse {
        path: origin.to_string(),
        line: 0,
        message: "empty file".into(),
    })?;
    Ok(DenseMatrix::new(rows, cols, data)?)
}

/// Read a matrix from a path, sniffing fmx vs text by the magic bytes.
pub fn read_matrix_path(path: &Path) -> Result<DenseMatrix> {
    let origin = path.display().to_string();
    let mut f = File::open(path)?;
    let mut magic = [0u8; 4];
    let n = f.read(&mut magic)?;
    drop(f);
    if n == 4 && &magic == MAGIC {
        read_fmx(BufReader::new(File::open(path)?), &origin)
    } else {
        read_text(BufReader::new(File::open(path)?), &origin)
    }
}

/// Read a single-column matrix (or single row) as a vector.
pub fn read_vector_path(path: &Path) -> Result<Vec<f64>> {
    let m = read_matrix_path(path)?;
    if m.cols() == 1 {
        Ok(m.into_data())
    } else if m.rows() == 1 {
        Ok(m.into_data())
    } else {
        Err(HarnessError::Usage(format!(
            "{} is {}x{}, expected a vector",
            path.display(),
            m.rows(),
            m.cols()
        )))
    }
}
