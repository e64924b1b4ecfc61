//! JSONL reading and writing.
//!
//! One JSON object per line, UTF-8. Blank lines are skipped and `\r\n`
//! endings are accepted; output always uses `\n`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::model::{GroundTruthRecord, OcrLayout, PredictionRecord, SchemaErrors};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: invalid JSON: {message}", path.display())]
    Json {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {} invalid record(s); first at line {}: {}", path.display(), problems.len(), problems[0].0, problems[0].1)]
    Schema {
        path: PathBuf,
        problems: Vec<(usize, SchemaErrors)>,
    },
}

/// Parsed JSON values with their 1-based line numbers.
pub fn read_jsonl_values(path: &Path) -> Result<Vec<(usize, Value)>, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_jsonl(&text).map_err(|(line, message)| LoadError::Json {
        path: path.to_owned(),
        line,
        message,
    })
}

pub fn parse_jsonl(text: &str) -> Result<Vec<(usize, Value)>, (usize, String)> {
    let mut out = Vec::new();
    for (i, line) in text.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(line).map_err(|e| (i + 1, e.to_string()))?;
        out.push((i + 1, value));
    }
    Ok(out)
}

/// Reads and validates every line; all schema violations are collected.
pub fn read_records<T>(
    path: &Path,
    parse: impl Fn(&Value) -> Result<T, SchemaErrors>,
) -> Result<Vec<T>, LoadError> {
    let values = read_jsonl_values(path)?;
    let mut records = Vec::with_capacity(values.len());
    let mut problems = Vec::new();
    for (line, v) in &values {
        match parse(v) {
            Ok(r) => records.push(r),
            Err(e) => problems.push((*line, e)),
        }
    }
    if problems.is_empty() {
        Ok(records)
    } else {
        Err(LoadError::Schema {
            path: path.to_owned(),
            problems,
        })
    }
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>, LoadError> {
    read_records(path, PredictionRecord::from_json)
}

pub fn read_groundtruth(path: &Path) -> Result<Vec<GroundTruthRecord>, LoadError> {
    read_records(path, GroundTruthRecord::from_json)
}

pub fn read_layouts(path: &Path) -> Result<Vec<OcrLayout>, LoadError> {
    read_records(path, OcrLayout::from_json)
}

pub fn to_jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item).expect("records serialize"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crlf_and_blank_lines() {
        let v = parse_jsonl("{\"a\":1}\r\n\r\n{\"b\":2}\n").unwrap();
        assert_eq!(v.iter().map(|(l, _)| *l).collect::<Vec<_>>(), vec![1, 3]);
    }

    #[test]
    fn bad_json_reports_line() {
        assert_eq!(parse_jsonl("{}\n{oops\n").unwrap_err().0, 2);
    }
}
