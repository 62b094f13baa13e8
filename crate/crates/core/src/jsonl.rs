//! Line-delimited JSON files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Schema { path: String, line: usize, message: String },
}

/// Read every non-blank line of `path` as a `T`. Line numbers in errors
/// are 1-based.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, JsonlError> {
    let display = path.display().to_string();
    let io = |source| JsonlError::Io {
        path: display.clone(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if let Some(value) = parse_line(&line, &display, i + 1)? {
            out.push(value);
        }
    }
    Ok(out)
}

/// Like [`read_jsonl`] over text already in memory; `name` stands in for
/// the path in errors.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str, name: &str) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(value) = parse_line(line, name, i + 1)? {
            out.push(value);
        }
    }
    Ok(out)
}

fn parse_line<T: DeserializeOwned>(line: &str, path: &str, line_no: usize) -> Result<Option<T>, JsonlError> {
    if line.trim().is_empty() {
        return Ok(None);
    }
    serde_json::from_str(line).map(Some).map_err(|e| JsonlError::Schema {
        path: path.to_string(),
        line: line_no,
        message: e.to_string(),
    })
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<(), JsonlError> {
    let io = |source| JsonlError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for item in items {
        let line = serde_json::to_string(&item).expect("serializable record");
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.jsonl");
        write_jsonl(&path, [1, 2, 3]).unwrap();
        assert_eq!(read_jsonl::<i32>(&path).unwrap(), vec![1, 2, 3]);
        std::fs::write(&path, "1\n\"a\"\n").unwrap();
        match read_jsonl::<i32>(&path) {
            Err(JsonlError::Schema { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
