//! CSV datasets: a header row of feature names followed by `label`, one
//! sample per row. Labels may be `-1/+1` or `0/1` (`0` reads as `-1`).

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ShapeBuilder};

use crate::data::Dataset;
use crate::error::{Error, Result};

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, column, message: message.into() }
}

/// Reads a dataset file, optionally standardizing every column.
pub fn load_csv(path: impl AsRef<Path>, standardize: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| io_err(path, e))?;
    let data = parse_csv(&text)?;
    Ok(if standardize { data.standardized() } else { data })
}

/// Parses dataset text. Line numbers in errors are 1-based and count the
/// header; column numbers are 1-based.
pub fn parse_csv(text: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(parse_err(1, 1, e.to_string())),
        None => return Err(parse_err(1, 1, "empty file")),
    };
    let width = header.len();
    if width < 2 {
        return Err(parse_err(1, 1, "need at least one feature column and a label column"));
    }
    if header.get(width - 1) != Some("label") {
        return Err(parse_err(1, width, "last column must be named \"label\""));
    }
    let names: Vec<String> = header.iter().take(width - 1).map(str::to_string).collect();
    let p = width - 1;

    let mut values = Vec::new();
    let mut y = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, 1, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != width {
            return Err(parse_err(line, rec.len().min(width) + 1, format!("expected {width} cells, found {}", rec.len())));
        }
        for (c, cell) in rec.iter().enumerate() {
            if cell.is_empty() {
                return Err(parse_err(line, c + 1, "missing value"));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(line, c + 1, format!("not a number: {cell:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(line, c + 1, "non-finite value"));
            }
            if c < p {
                values.push(v);
            } else {
                y.push(match v {
                    v if v == 1.0 => 1.0,
                    v if v == -1.0 || v == 0.0 => -1.0,
                    _ => return Err(parse_err(line, c + 1, format!("label {cell} is not in {{-1, 0, 1}}"))),
                });
            }
        }
    }
    let n = y.len();
    if n == 0 {
        return Err(parse_err(2, 1, "no data rows"));
    }
    let x = Array2::from_shape_fn((n, p).f(), |(i, j)| values[i * p + j]);
    Dataset::new(x, y)?.with_names(names)
}

/// Shortest decimal that reads back to the same `f64`.
fn cell(v: f64) -> String {
    format!("{v:?}")
}

/// Serializes a dataset with `-1/+1` labels.
pub fn dataset_to_csv(data: &Dataset) -> String {
    let mut out = String::new();
    let names: Vec<String> = match data.names() {
        Some(n) => n.to_vec(),
        None => (0..data.p()).map(|j| format!("x{}", j + 1)).collect(),
    };
    out.push_str(&names.join(","));
    out.push_str(",label\n");
    for i in 0..data.n() {
        for v in data.row(i) {
            out.push_str(&cell(*v));
            out.push(',');
        }
        out.push_str(if data.y()[i] > 0.0 { "1" } else { "-1" });
        out.push('\n');
    }
    out
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    File::create(path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|e| io_err(path, e))
}

pub fn write_csv(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    write_text(path, &dataset_to_csv(data))
}

/// Truth sidecar: `feature,weight` rows for every feature.
pub fn truth_to_csv(w_true: &[f64]) -> String {
    let mut out = String::from("feature,weight\n");
    for (j, w) in w_true.iter().enumerate() {
        out.push_str(&format!("{j},{}\n", cell(*w)));
    }
    out
}
