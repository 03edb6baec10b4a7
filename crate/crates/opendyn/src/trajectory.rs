//! Trajectory CSV files: `#` comment lines (a title and the run
//! configuration as JSON), a column header, then one row per output instant.
//! Missing values are written as `NaN`.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

pub const COLUMNS: [&str; 8] = ["t", "tdvp", "oracle", "abs_dev", "trace", "min_eig", "residual", "im_zdot"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub t: f64,
    pub tdvp: f64,
    pub oracle: f64,
    pub abs_dev: f64,
    pub trace: f64,
    pub min_eig: f64,
    pub residual: f64,
    pub im_zdot: f64,
}

impl Row {
    fn values(&self) -> [f64; 8] {
        [self.t, self.tdvp, self.oracle, self.abs_dev, self.trace, self.min_eig, self.residual, self.im_zdot]
    }
}

pub fn write<W: Write>(mut out: W, config_json: &str, rows: &[Row]) -> Result<()> {
    writeln!(out, "# opendyn trajectory")?;
    writeln!(out, "# config: {config_json}")?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_file(path: &Path, config_json: &str, rows: &[Row]) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write(std::io::BufWriter::new(file), config_json, rows)
}

pub fn read<R: Read>(input: R) -> Result<Vec<Row>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    ensure!(header == COLUMNS, "unexpected columns {header:?}");
    r.deserialize().map(|row| Ok(row?)).collect()
}

pub fn read_file(path: &Path) -> Result<Vec<Row>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read(std::io::BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ColumnDeviation {
    pub column: String,
    /// NaN when no row has the column in both files.
    pub max_abs: f64,
    pub mean_abs: f64,
    /// Rows where both files have a finite value.
    pub compared: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub rows: usize,
    pub columns: Vec<ColumnDeviation>,
}

#[derive(Debug)]
pub struct GridMismatch(pub String);

impl std::fmt::Display for GridMismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "time grids differ: {}", self.0)
    }
}

impl std::error::Error for GridMismatch {}

/// Per-column deviations between two trajectories on the same time grid
/// (within 1e-12). Rows where either side is not finite are skipped.
pub fn compare(a: &[Row], b: &[Row]) -> Result<Comparison> {
    if a.len() != b.len() {
        bail!(GridMismatch(format!("{} rows vs {} rows", a.len(), b.len())));
    }
    for (i, (ra, rb)) in a.iter().zip(b).enumerate() {
        if (ra.t - rb.t).abs() > 1e-12 {
            bail!(GridMismatch(format!("row {i}: t = {} vs {}", ra.t, rb.t)));
        }
    }
    let columns = (1..COLUMNS.len())
        .map(|c| {
            let diffs: Vec<f64> = a
                .iter()
                .zip(b)
                .map(|(ra, rb)| (ra.values()[c], rb.values()[c]))
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(x, y)| (x - y).abs())
                .collect();
            let (max_abs, mean_abs) = if diffs.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                (diffs.iter().cloned().fold(0.0, f64::max), diffs.iter().sum::<f64>() / diffs.len() as f64)
            };
            ColumnDeviation { column: COLUMNS[c].to_string(), max_abs, mean_abs, compared: diffs.len() }
        })
        .collect();
    Ok(Comparison { rows: a.len(), columns })
}
