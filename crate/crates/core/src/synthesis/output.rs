//! Writing samples: raw little-endian `f64` with a JSON sidecar, CSV, PGM.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{DiscretizationSummary, FieldSample, Grid, SpecSummary};
use crate::analysis::stats::quantile;
use crate::error::{Error, Result};

pub const FORMAT_VERSION: &str = "1";

/// Output formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Bin,
    Csv,
    Pgm,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bin" => Ok(Format::Bin),
            "csv" => Ok(Format::Csv),
            "pgm" => Ok(Format::Pgm),
            other => Err(Error::Invalid(format!("unknown output format '{other}'"))),
        }
    }
}

/// JSON sidecar of a binary sample.
#[derive(Debug, Serialize)]
pub struct Sidecar<'a> {
    pub format_version: &'static str,
    pub dims: Vec<usize>,
    pub grid: &'a Grid,
    pub spec: &'a SpecSummary,
    pub spec_sha256: String,
    pub seed: u64,
    pub discretization: &'a DiscretizationSummary,
    pub data_sha256: String,
    pub warnings: &'a [String],
}

/// Little-endian bytes of the values.
pub fn to_le_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn dims(grid: &Grid) -> Vec<usize> {
    match grid {
        Grid::Lattice { shape, .. } => shape.clone(),
        Grid::Points { points } => vec![points.len()],
    }
}

/// Writes `<stem>.bin` and `<stem>.json`; returns the written paths.
pub fn write_bin(sample: &FieldSample, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let bytes = to_le_bytes(&sample.values);
    let bin = dir.join(format!("{stem}.bin"));
    fs::write(&bin, &bytes)?;
    let sidecar = Sidecar {
        format_version: FORMAT_VERSION,
        dims: dims(&sample.grid),
        grid: &sample.grid,
        spec: &sample.spec,
        spec_sha256: sha256_hex(&serde_json::to_vec(&sample.spec)?),
        seed: sample.seed,
        discretization: &sample.discretization,
        data_sha256: sha256_hex(&bytes),
        warnings: &sample.warnings,
    };
    let json = dir.join(format!("{stem}.json"));
    fs::write(&json, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(vec![bin, json])
}

/// Writes `<stem>.csv` with coordinates and value per row.
pub fn write_csv(sample: &FieldSample, dir: &Path, stem: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{stem}.csv"));
    let mut w = BufWriter::new(fs::File::create(&path)?);
    let d = sample.grid.dim();
    let header: Vec<String> = (0..d).map(|k| format!("x{k}")).chain(["value".into()]).collect();
    writeln!(w, "{}", header.join(","))?;
    for (k, v) in sample.values.iter().enumerate() {
        let x = sample.grid.point(k);
        let cols: Vec<String> = x.iter().map(|c| format!("{c:.17e}")).collect();
        writeln!(w, "{},{v:.17e}", cols.join(","))?;
    }
    w.flush()?;
    Ok(path)
}

/// Writes an 8-bit `<stem>.pgm` preview of a two-dimensional lattice sample,
/// clipped to the 2nd-98th percentile window.
pub fn write_pgm(sample: &FieldSample, dir: &Path, stem: &str) -> Result<PathBuf> {
    let Grid::Lattice { shape, .. } = &sample.grid else {
        return Err(Error::Invalid("PGM preview needs a lattice grid".into()));
    };
    if shape.len() != 2 {
        return Err(Error::Invalid("PGM preview needs a two-dimensional lattice".into()));
    }
    fs::create_dir_all(dir)?;
    let lo = quantile(&sample.values, 0.02);
    let hi = quantile(&sample.values, 0.98);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let path = dir.join(format!("{stem}.pgm"));
    let mut w = BufWriter::new(fs::File::create(&path)?);
    write!(w, "P5\n{} {}\n255\n", shape[1], shape[0])?;
    let px: Vec<u8> = sample
        .values
        .iter()
        .map(|v| (((v - lo) / span).clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    w.write_all(&px)?;
    w.flush()?;
    Ok(path)
}
