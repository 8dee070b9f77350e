//! Binary dataset files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "TSPD1"  N: u64  K: u64  seed: u64      (29-byte header)
//! K × N × (x: f64, y: f64)
//! ```

use std::fs;
use std::path::Path;

use tsp_tta_core::rng::derive_seed;
use tsp_tta_core::tsp::TspInstance;

use crate::error::{FormatError, Result};

pub const DATASET_MAGIC: &[u8; 5] = b"TSPD1";
pub const DATASET_HEADER_LEN: usize = 5 + 3 * 8;

const DATASET_STREAM: u64 = 0xDA7A;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n: usize,
    pub seed: u64,
    pub instances: Vec<TspInstance>,
}

impl Dataset {
    /// `count` uniform instances; instance `k` depends only on `(seed, k)`.
    pub fn generate(n: usize, count: usize, seed: u64) -> Result<Self> {
        let instances = (0..count)
            .map(|k| TspInstance::generate(n, derive_seed(seed, DATASET_STREAM, k as u64)))
            .collect::<tsp_tta_core::Result<Vec<_>>>()?;
        Ok(Dataset { n, seed, instances })
    }

    pub fn byte_len(n: usize, k: usize) -> usize {
        DATASET_HEADER_LEN + k * n * 2 * 8
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::byte_len(self.n, self.instances.len()));
        out.extend_from_slice(DATASET_MAGIC);
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&(self.instances.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        for inst in &self.instances {
            for p in inst.coords() {
                out.extend_from_slice(&p[0].to_le_bytes());
                out.extend_from_slice(&p[1].to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < DATASET_MAGIC.len() || &bytes[..5] != DATASET_MAGIC {
            let found = String::from_utf8_lossy(&bytes[..bytes.len().min(5)]).into_owned();
            return Err(FormatError::BadMagic {
                expected: "TSPD1",
                found,
            });
        }
        if bytes.len() < DATASET_HEADER_LEN {
            return Err(FormatError::Corrupt(format!(
                "dataset header needs {DATASET_HEADER_LEN} bytes, file has {}",
                bytes.len()
            )));
        }
        let word = |i: usize| u64::from_le_bytes(bytes[5 + 8 * i..13 + 8 * i].try_into().expect("8 bytes"));
        let (n, k, seed) = (word(0), word(1), word(2));
        let expected = n
            .checked_mul(k)
            .and_then(|v| v.checked_mul(16))
            .and_then(|v| v.checked_add(DATASET_HEADER_LEN as u64));
        if expected != Some(bytes.len() as u64) {
            return Err(FormatError::Corrupt(format!(
                "header declares {k} instances of {n} cities, body has {} bytes",
                bytes.len() - DATASET_HEADER_LEN
            )));
        }
        let (n, k) = (n as usize, k as usize);
        let body = &bytes[DATASET_HEADER_LEN..];
        let float = |i: usize| f64::from_le_bytes(body[8 * i..8 * i + 8].try_into().expect("8 bytes"));
        let instances = (0..k)
            .map(|j| {
                let base = j * n * 2;
                let coords = (0..n).map(|c| [float(base + 2 * c), float(base + 2 * c + 1)]).collect();
                TspInstance::new(coords)
            })
            .collect::<tsp_tta_core::Result<Vec<_>>>()?;
        Ok(Dataset { n, seed, instances })
    }
}

pub fn save_dataset(path: &Path, data: &Dataset) -> Result<()> {
    fs::write(path, data.to_bytes())?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    Dataset::from_bytes(&fs::read(path)?)
}
