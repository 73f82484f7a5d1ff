//! Plain-text dataset files.
//!
//! * points: one point per line, values separated by commas or whitespace.
//!   An optional first line of column names is skipped; when labels are
//!   requested they are taken from the last column.
//! * bits: one `0`/`1` string per line.
//! * ratings: `user item rating` triples with ratings in {-1, +1}.
//!
//! Blank lines and lines starting with `#` are ignored. Values are written
//! with Rust's shortest round-trip formatting, so a write followed by a load
//! reproduces every `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use neighborly::{BitVector, RealVector};

use crate::error::{CliError, CliResult};

fn malformed(path: &Path, line: usize, reason: impl Into<String>) -> CliError {
    CliError::Malformed {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointFile {
    pub points: Vec<RealVector>,
    pub labels: Option<Vec<f64>>,
}

pub fn parse_points(path: &Path, text: &str, labeled: bool) -> CliResult<PointFile> {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (k, (line_no, line)) in content_lines(text).enumerate() {
        let raw: Vec<&str> = fields(line).collect();
        let parsed: Result<Vec<f64>, _> = raw.iter().map(|f| f.parse::<f64>()).collect();
        let mut values = match parsed {
            Ok(v) => v,
            Err(_) if k == 0 => continue,
            Err(e) => return Err(malformed(path, line_no, format!("not a number: {e}"))),
        };
        if width.is_some_and(|w| w != values.len()) {
            return Err(malformed(path, line_no, format!("expected {} columns, found {}", width.unwrap(), values.len())));
        }
        width = Some(values.len());
        if labeled {
            let label = values.pop().ok_or_else(|| malformed(path, line_no, "missing label column"))?;
            labels.push(label);
        }
        let point = RealVector::new(values).map_err(|e| malformed(path, line_no, e.to_string()))?;
        points.push(point);
    }
    if points.is_empty() {
        return Err(neighborly::Error::EmptyDataset.into());
    }
    Ok(PointFile {
        points,
        labels: labeled.then_some(labels),
    })
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_points(path: &Path, labeled: bool) -> CliResult<PointFile> {
    parse_points(path, &read(path)?, labeled)
}

pub fn format_points(points: &[RealVector], labels: Option<&[f64]>) -> String {
    let mut out = String::new();
    for (i, p) in points.iter().enumerate() {
        let mut first = true;
        for v in p.as_slice() {
            if !first {
                out.push(',');
            }
            first = false;
            write!(out, "{v}").unwrap();
        }
        if let Some(l) = labels {
            write!(out, ",{}", l[i]).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_points(path: &Path, points: &[RealVector], labels: Option<&[f64]>) -> CliResult<()> {
    Ok(fs::write(path, format_points(points, labels))?)
}

pub fn parse_bits(path: &Path, text: &str) -> CliResult<Vec<BitVector>> {
    let mut out = Vec::new();
    for (line_no, line) in content_lines(text) {
        let v = BitVector::parse(line).map_err(|e| malformed(path, line_no, e.to_string()))?;
        if out.first().is_some_and(|f: &BitVector| neighborly::Point::dim(f) != neighborly::Point::dim(&v)) {
            return Err(malformed(path, line_no, "bit strings differ in length"));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(neighborly::Error::EmptyDataset.into());
    }
    Ok(out)
}

pub fn load_bits(path: &Path) -> CliResult<Vec<BitVector>> {
    parse_bits(path, &read(path)?)
}

pub fn parse_ratings(path: &Path, text: &str) -> CliResult<Vec<(usize, usize, i8)>> {
    let mut out = Vec::new();
    for (line_no, line) in content_lines(text) {
        let f: Vec<&str> = fields(line).collect();
        if f.len() != 3 {
            return Err(malformed(path, line_no, "expected `user item rating`"));
        }
        let user = f[0].parse().map_err(|_| malformed(path, line_no, "bad user id"))?;
        let item = f[1].parse().map_err(|_| malformed(path, line_no, "bad item id"))?;
        let rating: i8 = f[2].parse().map_err(|_| malformed(path, line_no, "bad rating"))?;
        if rating != 1 && rating != -1 {
            return Err(malformed(path, line_no, "rating must be -1 or 1"));
        }
        out.push((user, item, rating));
    }
    if out.is_empty() {
        return Err(neighborly::Error::EmptyDataset.into());
    }
    Ok(out)
}

pub fn load_ratings(path: &Path) -> CliResult<Vec<(usize, usize, i8)>> {
    parse_ratings(path, &read(path)?)
}

pub fn format_ratings(triples: &[(usize, usize, i8)]) -> String {
    triples.iter().map(|(u, i, y)| format!("{u} {i} {y}\n")).collect()
}
