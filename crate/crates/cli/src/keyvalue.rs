//! `key=value` configuration files.

use std::fs;
use std::path::Path;

use crate::error::{FormatError, Result};

/// Non-empty lines that are not `#` comments, split at the first `=`.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| FormatError::Corrupt(format!("line {}: expected key=value, got '{line}'", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn read_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    parse_pairs(&fs::read_to_string(path)?)
}
