//! Two-column CSV readers for count data and severity distributions.
//!
//! A first row whose cells are both non-numeric is taken as a header. Cells
//! are trimmed; blank lines are skipped; `\n` and `\r\n` both work.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use nbrig::{CountData, SeverityPmf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Line {
        path: String,
        line: u64,
        message: String,
    },
    #[error("{path}: no data rows")]
    Empty { path: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

struct Row {
    line: u64,
    first: String,
    second: String,
}

fn read_rows(path: &Path) -> Result<Vec<Row>, InputError> {
    let name = path.display().to_string();
    let bytes = fs::read(path).map_err(|source| InputError::Io {
        path: name.clone(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            InputError::Line {
                path: name.clone(),
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 2 {
            return Err(InputError::Line {
                path: name,
                line,
                message: format!("expected 2 columns, found {}", record.len()),
            });
        }
        rows.push(Row {
            line,
            first: record[0].to_string(),
            second: record[1].to_string(),
        });
    }
    if let Some(head) = rows.first() {
        let numeric = |s: &str| s.parse::<f64>().is_ok();
        if !numeric(&head.first) && !numeric(&head.second) {
            rows.remove(0);
        }
    }
    if rows.is_empty() {
        return Err(InputError::Empty { path: name });
    }
    Ok(rows)
}

fn parse_count(path: &str, line: u64, token: &str, what: &str) -> Result<u64, InputError> {
    token.parse::<u64>().map_err(|_| {
        let message = if token.parse::<i128>().is_ok_and(|v| v < 0) {
            format!("negative {what} {token:?}")
        } else if token.parse::<i128>().is_ok() {
            format!("{what} {token:?} is too large")
        } else {
            format!("{what} {token:?} is not an integer")
        };
        InputError::Line {
            path: path.to_string(),
            line,
            message,
        }
    })
}

fn check_duplicate(
    seen: &mut HashMap<u64, u64>,
    path: &str,
    key: u64,
    line: u64,
    what: &str,
) -> Result<(), InputError> {
    if let Some(first) = seen.insert(key, line) {
        return Err(InputError::Line {
            path: path.to_string(),
            line,
            message: format!("duplicate {what} {key} (first seen on line {first})"),
        });
    }
    Ok(())
}

/// Reads `count,frequency` rows.
pub fn ingest_counts(path: &Path) -> Result<CountData, InputError> {
    let name = path.display().to_string();
    let rows = read_rows(path)?;
    let mut seen = HashMap::new();
    let mut pairs = Vec::with_capacity(rows.len());
    for row in rows {
        let x = parse_count(&name, row.line, &row.first, "count")?;
        let f = parse_count(&name, row.line, &row.second, "frequency")?;
        check_duplicate(&mut seen, &name, x, row.line, "count")?;
        pairs.push((x, f));
    }
    CountData::from_pairs(pairs).map_err(|e| InputError::Invalid {
        path: name,
        message: e.to_string(),
    })
}

/// Reads `y,probability` rows.
pub fn ingest_severity(path: &Path) -> Result<SeverityPmf, InputError> {
    let name = path.display().to_string();
    let rows = read_rows(path)?;
    let mut seen = HashMap::new();
    let mut pairs = Vec::with_capacity(rows.len());
    for row in rows {
        let y = parse_count(&name, row.line, &row.first, "severity value")?;
        let f: f64 = row.second.parse().map_err(|_| InputError::Line {
            path: name.clone(),
            line: row.line,
            message: format!("probability {:?} is not a number", row.second),
        })?;
        check_duplicate(&mut seen, &name, y, row.line, "severity value")?;
        pairs.push((y, f));
    }
    SeverityPmf::new(pairs).map_err(|e| InputError::Invalid {
        path: name,
        message: e.to_string(),
    })
}
