//! Minimal tab-separated reading shared by the gold, pairs and unit files.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TsvError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path} line {line}: expected at least {expected} tab-separated fields")]
    Fields {
        path: PathBuf,
        line: usize,
        expected: usize,
    },
}

/// Reads non-blank lines of `path` split on tabs. A first line whose
/// first field equals one of `header_names` is skipped.
pub fn read_rows(
    path: &Path,
    min_fields: usize,
    header_names: &[&str],
) -> Result<Vec<Vec<String>>, TsvError> {
    let text = fs::read_to_string(path).map_err(|source| TsvError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split('\t').map(str::to_owned).collect();
        if rows.is_empty() && i == 0 && header_names.contains(&fields[0].as_str()) {
            continue;
        }
        if fields.len() < min_fields {
            return Err(TsvError::Fields {
                path: path.to_path_buf(),
                line: i + 1,
                expected: min_fields,
            });
        }
        rows.push(fields);
    }
    Ok(rows)
}
