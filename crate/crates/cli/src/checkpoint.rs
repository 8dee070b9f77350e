//! Binary checkpoint files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "TSPM1"  header_len: u64
//! header_len bytes of UTF-8:
//!     key=value            (one line per model setting)
//!     [manifest]
//!     name d1,d2,...       (one line per tensor, canonical order)
//! parameters as f32, manifest order
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use tsp_tta_core::autodiff::Tensor;
use tsp_tta_core::model::{ModelConfig, PolicyParams};

use crate::error::{FormatError, Result};

pub const CHECKPOINT_MAGIC: &[u8; 5] = b"TSPM1";
const MANIFEST_MARKER: &str = "[manifest]";

pub fn checkpoint_bytes(config: &ModelConfig, params: &PolicyParams) -> Result<Vec<u8>> {
    params.check(config)?;
    let mut header = String::new();
    for (k, v) in config.to_pairs() {
        header.push_str(&format!("{k}={v}\n"));
    }
    header.push_str(MANIFEST_MARKER);
    header.push('\n');
    let manifest = PolicyParams::manifest(config);
    for spec in &manifest {
        let dims: Vec<String> = spec.shape.iter().map(usize::to_string).collect();
        header.push_str(&format!("{} {}\n", spec.name, dims.join(",")));
    }
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for spec in &manifest {
        let t = params.get(&spec.name).expect("checked against the schema");
        for &v in t.data() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

fn corrupt(msg: impl Into<String>) -> FormatError {
    FormatError::Corrupt(msg.into())
}

pub fn parse_checkpoint(bytes: &[u8]) -> Result<(ModelConfig, PolicyParams)> {
    if bytes.len() < 5 || &bytes[..5] != CHECKPOINT_MAGIC {
        return Err(FormatError::BadMagic {
            expected: "TSPM1",
            found: String::from_utf8_lossy(&bytes[..bytes.len().min(5)]).into_owned(),
        });
    }
    let len_bytes = bytes.get(5..13).ok_or_else(|| corrupt("checkpoint header length missing"))?;
    let header_len = u64::from_le_bytes(len_bytes.try_into().expect("8 bytes"));
    let header_end = usize::try_from(header_len)
        .ok()
        .and_then(|l| l.checked_add(13))
        .filter(|&end| end <= bytes.len())
        .ok_or_else(|| corrupt(format!("header declares {header_len} bytes, file has {}", bytes.len())))?;
    let header =
        std::str::from_utf8(&bytes[13..header_end]).map_err(|_| corrupt("checkpoint header is not UTF-8"))?;

    let (settings, manifest) = header
        .split_once(&format!("{MANIFEST_MARKER}\n"))
        .ok_or_else(|| corrupt("checkpoint header has no manifest"))?;
    let mut config = ModelConfig::desk_scale(2);
    for line in settings.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| corrupt(format!("bad header line '{line}'")))?;
        config.apply_pair(k.trim(), v.trim())?;
    }
    config.validate()?;

    let mut entries = Vec::new();
    for line in manifest.lines().filter(|l| !l.trim().is_empty()) {
        let (name, dims) = line
            .split_once(' ')
            .ok_or_else(|| corrupt(format!("bad manifest line '{line}'")))?;
        let shape = dims
            .split(',')
            .map(|d| d.parse::<usize>().map_err(|_| corrupt(format!("bad shape in '{line}'"))))
            .collect::<Result<Vec<_>>>()?;
        entries.push((name.to_string(), shape));
    }
    let expected: Vec<(String, Vec<usize>)> = PolicyParams::manifest(&config)
        .into_iter()
        .map(|s| (s.name, s.shape))
        .collect();
    if entries != expected {
        return Err(FormatError::Incompatible(
            "manifest does not match the architecture described in the header".into(),
        ));
    }

    let total: usize = entries.iter().map(|(_, s)| s.iter().product::<usize>()).sum();
    let body = &bytes[header_end..];
    if body.len() != total * 4 {
        return Err(corrupt(format!(
            "manifest needs {} parameter bytes, file has {}",
            total * 4,
            body.len()
        )));
    }
    let mut tensors = BTreeMap::new();
    let mut offset = 0;
    for (name, shape) in entries {
        let len: usize = shape.iter().product();
        let data = body[offset..offset + 4 * len]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect();
        offset += 4 * len;
        tensors.insert(name, Tensor::new(shape, data)?);
    }
    let params = PolicyParams::from_tensors(&config, tensors)?;
    Ok((config, params))
}

pub fn save_checkpoint(path: &Path, config: &ModelConfig, params: &PolicyParams) -> Result<()> {
    fs::write(path, checkpoint_bytes(config, params)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelConfig, PolicyParams)> {
    parse_checkpoint(&fs::read(path)?)
}

/// Rejects a checkpoint whose city count differs from the data it is used on.
pub fn ensure_city_count(config: &ModelConfig, n: usize) -> Result<()> {
    if config.n_cities != n {
        return Err(FormatError::Incompatible(format!(
            "checkpoint expects {} cities, data has {n}",
            config.n_cities
        )));
    }
    Ok(())
}
