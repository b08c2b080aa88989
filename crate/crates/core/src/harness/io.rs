//! Dataset CSV and ground-truth JSON.
//!
//! A dataset file holds one point per row as comma-separated decimals. The
//! first row is a header iff any of its fields fails to parse as a number; a
//! header whose last field is `w` marks the last column as the point weight.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::{GroundTruth, SyntheticSpec};
use crate::error::{Error, Result};
use crate::geometry::Dataset;

fn parse_row(record: &csv::StringRecord, line: usize) -> Result<Vec<f64>> {
    record
        .iter()
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {line}: `{f}` is not a number")))
        })
        .collect()
}

pub fn read_dataset_from<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut records = rdr.records().enumerate().peekable();
    let mut weighted = false;
    if let Some((_, Ok(first))) = records.peek() {
        let is_header = first.iter().any(|f| f.trim().parse::<f64>().is_err());
        if is_header {
            weighted = matches!(first.iter().next_back().map(str::trim), Some("w" | "weight"));
            records.next();
        }
    }
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    let mut width = None;
    for (line, rec) in records {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let mut row = parse_row(&rec, line + 1)?;
        if *width.get_or_insert(row.len()) != row.len() {
            return Err(Error::Parse(format!(
                "line {}: expected {} fields, found {}",
                line + 1,
                width.unwrap_or_default(),
                row.len()
            )));
        }
        if weighted {
            weights.push(row.pop().ok_or_else(|| Error::Parse("empty row".into()))?);
        }
        coords.extend(row);
    }
    let width = width.ok_or_else(|| Error::InvalidDataset("no data rows".into()))?;
    let dim = if weighted { width - 1 } else { width };
    let data = Dataset::new(dim, coords)?;
    if weighted {
        data.with_weights(weights)
    } else {
        Ok(data)
    }
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    read_dataset_from(BufReader::new(File::open(path)?))
}

/// Writes rows with Rust's shortest round-trip float formatting; weighted
/// datasets get a header ending in `w`.
pub fn write_dataset_to<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    if data.is_weighted() {
        let mut header: Vec<String> = (0..data.dim()).map(|t| format!("x{t}")).collect();
        header.push("w".into());
        writeln!(w, "{}", header.join(","))?;
    }
    let mut line = String::new();
    for (i, p) in data.points().enumerate() {
        line.clear();
        for (t, c) in p.iter().enumerate() {
            if t > 0 {
                line.push(',');
            }
            line.push_str(&c.to_string());
        }
        if data.is_weighted() {
            line.push(',');
            line.push_str(&data.weight(i).to_string());
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset(data: &Dataset, path: &Path) -> Result<()> {
    write_dataset_to(data, File::create(path)?)
}

/// Ground-truth sidecar written next to a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub true_centers: Vec<Vec<f64>>,
    pub outlier_indices: Vec<usize>,
    pub planted_zcost: f64,
    pub spec: Option<SyntheticSpec>,
}

impl TruthFile {
    pub fn new(truth: &GroundTruth, spec: Option<SyntheticSpec>) -> Self {
        TruthFile {
            true_centers: truth.true_centers.clone(),
            outlier_indices: truth.outlier_indices.clone(),
            planted_zcost: truth.planted_zcost,
            spec,
        }
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}
