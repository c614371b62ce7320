//! Wide dataset CSV and long plot-data CSV, with atomic file output.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{Context, Result};
use fts_projection::{Curve, FtsDataset, Grid};
use serde::{Deserialize, Serialize};

/// Malformed input, reported with a 1-based location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub row: usize,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.column {
            Some(c) => write!(f, "row {}, column {}: {}", self.row, c, self.message),
            None => write!(f, "row {}: {}", self.row, self.message),
        }
    }
}

impl std::error::Error for ParseError {}

/// Whether the first CSV row holds grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum HeaderMode {
    /// A header is present if the first row is non-numeric or an evenly
    /// spaced increasing sequence.
    #[default]
    Auto,
    Present,
    Absent,
}

const SPACING_TOLERANCE: f64 = 1e-9;

fn parse_cell(cell: &str, row: usize, column: usize) -> std::result::Result<f64, ParseError> {
    let v: f64 = cell.trim().parse().map_err(|_| ParseError {
        row,
        column: Some(column),
        message: format!("{cell:?} is not a number"),
    })?;
    if !v.is_finite() {
        return Err(ParseError { row, column: Some(column), message: format!("{cell:?} is not finite") });
    }
    Ok(v)
}

/// Index of the first gap that breaks even increasing spacing, if any.
fn spacing_violation(points: &[f64]) -> Option<usize> {
    if points.len() < 2 {
        return Some(0);
    }
    let step = (points[points.len() - 1] - points[0]) / (points.len() - 1) as f64;
    if step <= 0.0 {
        return Some(1);
    }
    let scale = points[0].abs().max(points[points.len() - 1].abs()).max(step);
    (1..points.len()).find(|&j| (points[j] - points[0] - step * j as f64).abs() > SPACING_TOLERANCE * scale)
}

/// Parse a wide CSV: an optional header of grid points, then one curve per row.
///
/// Header points may be on any evenly spaced scale (hours, say); they are
/// mapped affinely onto `[0, 1]`.
pub fn parse_csv<R: Read>(reader: R, header: HeaderMode) -> Result<FtsDataset> {
    let mut csv = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    let mut first_line = None;
    for (i, record) in csv.records().enumerate() {
        let line = i + 1;
        let record = record.with_context(|| format!("row {line}: unreadable CSV record"))?;
        let cells: Vec<&str> = record.iter().collect();
        if cells.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        if i == 0 {
            let numeric: Option<Vec<f64>> = cells.iter().map(|c| c.trim().parse::<f64>().ok()).collect();
            let is_header = match (header, &numeric) {
                (HeaderMode::Absent, _) => false,
                (HeaderMode::Present, _) | (HeaderMode::Auto, None) => true,
                (HeaderMode::Auto, Some(points)) => spacing_violation(points).is_none(),
            };
            if is_header {
                if let Some(points) = numeric {
                    if let Some(j) = spacing_violation(&points) {
                        return Err(ParseError {
                            row: line,
                            column: Some(j + 1),
                            message: "header grid is not evenly spaced and increasing".into(),
                        }
                        .into());
                    }
                }
                width = Some(cells.len());
                first_line = Some(line);
                continue;
            }
        }
        let expected = *width.get_or_insert(cells.len());
        if cells.len() != expected {
            let against = match first_line {
                Some(_) => "the header".to_string(),
                None => "the first row".to_string(),
            };
            return Err(ParseError {
                row: line,
                column: None,
                message: format!("has {} cells but {against} has {expected}", cells.len()),
            }
            .into());
        }
        let values = cells
            .iter()
            .enumerate()
            .map(|(j, c)| parse_cell(c, line, j + 1))
            .collect::<std::result::Result<Vec<f64>, _>>()?;
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(ParseError { row: 1, column: None, message: "no curves in input".into() }.into());
    }
    let grid = Grid::new(rows[0].len())?;
    let curves = rows.into_iter().map(Curve::new).collect::<fts_projection::Result<Vec<_>>>()?;
    Ok(FtsDataset::new(grid, curves)?)
}

pub fn load_csv(path: &Path, header: HeaderMode) -> Result<FtsDataset> {
    let file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    parse_csv(file, header).with_context(|| format!("in {}", path.display()))
}

/// Wide CSV with a header of grid points. Floats use the shortest text that
/// parses back to the same value.
pub fn dataset_csv(dataset: &FtsDataset) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(dataset.grid().points().iter().map(|p| p.to_string()))?;
    for c in dataset.curves() {
        w.write_record(c.values().iter().map(|v| v.to_string()))?;
    }
    w.into_inner().context("flushing CSV")
}

/// One row of long-format plot data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotPoint {
    pub t: f64,
    pub value: f64,
    pub series: String,
}

pub fn plot_csv(points: &[PlotPoint]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in points {
        w.serialize(p)?;
    }
    w.into_inner().context("flushing CSV")
}

/// Any serialisable rows as CSV with a header.
pub fn rows_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().context("flushing CSV")
}

/// Write `bytes` to `path` through a temporary file in the same directory,
/// so readers never see a partial file. `None` writes to stdout.
pub fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        out.write_all(bytes)?;
        return Ok(out.flush()?);
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_headers() {
        let ds = parse_csv("0,0.5,1\n1,2,3\n4,5,7\n".as_bytes(), HeaderMode::Auto).unwrap();
        assert_eq!(ds.len(), 2);
        let ds = parse_csv("3,1,2\n1,2,3\n".as_bytes(), HeaderMode::Auto).unwrap();
        assert_eq!(ds.len(), 2);
        // an evenly spaced row is data when told so
        let ds = parse_csv("1,2,3\n4,5,7\n".as_bytes(), HeaderMode::Absent).unwrap();
        assert_eq!(ds.len(), 2);
        let ds = parse_csv("h0,h1,h2\n1,2,3\n3,2,1\n".as_bytes(), HeaderMode::Auto).unwrap();
        assert_eq!(ds.len(), 2);
        let ds = parse_csv("0,12,24\n1,2,3\n3,2,1\n".as_bytes(), HeaderMode::Auto).unwrap();
        assert_eq!(ds.grid().len(), 3);
    }

    #[test]
    fn reports_locations() {
        let err = parse_csv("0,0.5,1\n1,2,3\n1,2\n".as_bytes(), HeaderMode::Auto).unwrap_err();
        let e = err.downcast_ref::<ParseError>().unwrap();
        assert_eq!((e.row, e.column), (3, None));
        let err = parse_csv("1,2,3\n1,x,3\n".as_bytes(), HeaderMode::Absent).unwrap_err();
        let e = err.downcast_ref::<ParseError>().unwrap();
        assert_eq!((e.row, e.column), (2, Some(2)));
        let err = parse_csv("0,0.2,1\n1,2,3\n".as_bytes(), HeaderMode::Present).unwrap_err();
        let e = err.downcast_ref::<ParseError>().unwrap();
        assert_eq!((e.row, e.column), (1, Some(2)));
        assert!(parse_csv("".as_bytes(), HeaderMode::Auto).is_err());
    }
}
