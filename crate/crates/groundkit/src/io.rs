//! JSONL reading/writing with per-line error context.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::record::GroundingRecord;

fn io_err(action: &'static str, path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        action,
        path: path.display().to_string(),
        source,
    }
}

/// Reads one JSON value per non-empty line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| io_err("open", path, e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err("read", path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|source| Error::JsonLine {
            path: path.display().to_string(),
            line: idx + 1,
            source,
        })?;
        out.push(value);
    }
    Ok(out)
}

/// Writes one JSON object per line.
pub fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    items: impl IntoIterator<Item = &'a T>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err("create", path, e))?;
    let mut writer = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).map_err(|source| Error::JsonLine {
            path: path.display().to_string(),
            line: 0,
            source,
        })?;
        writer
            .write_all(line.as_bytes())
            .and_then(|_| writer.write_all(b"\n"))
            .map_err(|e| io_err("write", path, e))?;
    }
    writer.flush().map_err(|e| io_err("write", path, e))
}

/// Reads grounding records, validating each and enforcing unique ids.
pub fn read_records(path: &Path) -> Result<Vec<GroundingRecord>> {
    let records: Vec<GroundingRecord> = read_jsonl(path)?;
    let mut seen = std::collections::HashSet::with_capacity(records.len());
    for rec in &records {
        rec.validate()?;
        if !seen.insert(rec.id.as_str()) {
            return Err(Error::InvalidRecord {
                id: rec.id.clone(),
                reason: "duplicate record id".into(),
            });
        }
    }
    Ok(records)
}
