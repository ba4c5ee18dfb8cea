//! Two-class dataset loader.
//!
//! Accepts delimiter-separated text with one instance per row: every column
//! except the last is a numeric feature, the last column is a class label
//! string, and exactly two distinct labels must occur (the UCI ionosphere
//! and sonar exports have this shape). Malformed rows fail the load with
//! their 1-based line number.

use std::path::Path;

use nepv_core::mat::Mat;
use nepv_core::problems::rlda::TwoClassData;

use crate::error::{CliError, CliResult};

/// Splits one row by the detected delimiter.
fn split_row(line: &str, delim: Option<char>) -> Vec<&str> {
    match delim {
        Some(c) => line.split(c).map(str::trim).collect(),
        None => line.split_whitespace().collect(),
    }
}

/// Picks the delimiter from the first data line: comma, then semicolon,
/// then general whitespace.
fn detect_delimiter(line: &str) -> Option<char> {
    if line.contains(',') {
        Some(',')
    } else if line.contains(';') {
        Some(';')
    } else {
        None
    }
}

pub fn load_two_class(path: &Path) -> CliResult<TwoClassData> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(&format!("reading dataset {}", path.display()), e))?;
    parse_two_class(&text, path)
}

pub fn parse_two_class(text: &str, path: &Path) -> CliResult<TwoClassData> {
    let mut delim: Option<Option<char>> = None;
    let mut width: Option<usize> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<String> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        let delim = *delim.get_or_insert_with(|| detect_delimiter(line));
        let fields = split_row(line, delim);
        if fields.len() < 2 {
            return Err(CliError::Io(format!(
                "{}:{line_no}: expected at least one feature and a label, got {} field(s)",
                path.display(),
                fields.len()
            )));
        }
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(CliError::Io(format!(
                    "{}:{line_no}: expected {w} fields like the first row, got {}",
                    path.display(),
                    fields.len()
                )));
            }
            Some(_) => {}
        }
        let (label, feature_fields) = fields.split_last().expect("length checked above");
        let mut features = Vec::with_capacity(feature_fields.len());
        for (col, field) in feature_fields.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                CliError::Io(format!(
                    "{}:{line_no}: column {} is not a number: `{field}`",
                    path.display(),
                    col + 1
                ))
            })?;
            features.push(value);
        }
        rows.push(features);
        labels.push(label.to_string());
    }

    if rows.is_empty() {
        return Err(CliError::Io(format!(
            "{}: no data rows found",
            path.display()
        )));
    }

    let mut names: Vec<&String> = labels.iter().collect();
    names.sort();
    names.dedup();
    if names.len() != 2 {
        return Err(CliError::Io(format!(
            "{}: expected exactly two class labels, found {}: {:?}",
            path.display(),
            names.len(),
            names
        )));
    }
    // Deterministic class assignment: the lexicographically smaller label is
    // class X regardless of row order.
    let first = names[0].clone();
    let flags: Vec<bool> = labels.iter().map(|l| *l == first).collect();

    let dim = rows[0].len();
    let features = Mat::from_fn(rows.len(), dim, |i, j| rows[i][j]);
    TwoClassData::new(features, flags)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
