use std::fmt::Write as _;
use std::path::Path;

use super::{Dataset, ModelError};
use crate::linalg::SparseMatrix;

fn parse_err(line: usize, message: impl Into<String>) -> ModelError {
    ModelError::Parse { line, message: message.into() }
}

/// Parses `label idx:val idx:val ...` lines with 1-based, strictly ascending
/// indices. Blank lines and lines starting with `#` are skipped. `d` defaults
/// to the largest index seen.
pub fn parse_libsvm(text: &str, d: Option<usize>) -> Result<Dataset, ModelError> {
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().expect("nonempty line has a token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(line_no, format!("non-numeric label {label_tok:?}")))?;
        if !label.is_finite() {
            return Err(parse_err(line_no, format!("non-finite label {label_tok:?}")));
        }
        let mut row = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(line_no, format!("expected idx:val, got {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(line_no, format!("non-numeric index {idx:?}")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(line_no, format!("non-numeric value {val:?}")))?;
            if idx == 0 {
                return Err(parse_err(line_no, "indices are 1-based"));
            }
            if !val.is_finite() {
                return Err(parse_err(line_no, format!("non-finite value in {tok:?}")));
            }
            if idx <= last {
                return Err(ModelError::NonAscending { line: line_no });
            }
            last = idx;
            row.push((idx - 1, val));
        }
        max_index = max_index.max(last);
        labels.push(label);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(ModelError::NoSamples);
    }
    let cols = match d {
        Some(d) if d < max_index => {
            return Err(ModelError::Invalid(format!("feature index {max_index} exceeds declared dimension {d}")))
        }
        Some(d) => d,
        None => max_index,
    };
    let features = SparseMatrix::from_rows(cols, &rows)?;
    Dataset::new(features, labels.into(), None)
}

pub fn load_libsvm(path: &Path, d: Option<usize>) -> Result<Dataset, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io { path: path.to_path_buf(), source })?;
    parse_libsvm(&text, d)
}

/// Emits one line per sample; floats use shortest round-trip formatting.
pub fn write_libsvm(ds: &Dataset) -> String {
    let mut out = String::new();
    for i in 0..ds.n() {
        write!(out, "{}", ds.labels[i]).unwrap();
        let (idx, val) = ds.features.row(i);
        for (c, v) in idx.iter().zip(val) {
            write!(out, " {}:{}", c + 1, v).unwrap();
        }
        out.push('\n');
    }
    out
}
