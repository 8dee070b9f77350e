use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail};
use tsp_tta_core::decoding::{decode_beam, decode_greedy, BeamConfig, DecodedTour};
use tsp_tta_core::exec::Sequential;
use tsp_tta_core::model::{ModelConfig, PolicyParams};
use tsp_tta_core::tsp::TspInstance;
use tsp_tta_core::tta::{tta_solve, AugmentPolicy, TtaConfig};

/// `greedy`, `beam:B` or `tta:M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderChoice {
    Greedy,
    Beam(usize),
    Tta(usize),
}

impl FromStr for DecoderChoice {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let count = |v: &str| -> anyhow::Result<usize> {
            match v.parse::<usize>() {
                Ok(n) if n >= 1 => Ok(n),
                _ => Err(anyhow!("decoder '{s}': expected a positive count after ':'")),
            }
        };
        match s.split_once(':') {
            None if s == "greedy" => Ok(DecoderChoice::Greedy),
            Some(("beam", b)) => Ok(DecoderChoice::Beam(count(b)?)),
            Some(("tta", m)) => Ok(DecoderChoice::Tta(count(m)?)),
            _ => bail!("unknown decoder '{s}' (expected greedy, beam:B or tta:M)"),
        }
    }
}

impl fmt::Display for DecoderChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecoderChoice::Greedy => f.write_str("greedy"),
            DecoderChoice::Beam(b) => write!(f, "beam:{b}"),
            DecoderChoice::Tta(m) => write!(f, "tta:{m}"),
        }
    }
}

impl DecoderChoice {
    /// Decodes instance `index` of a batch; TTA seeds depend on `(seed, index)`.
    pub fn decode(
        &self,
        inst: &TspInstance,
        config: &ModelConfig,
        params: &PolicyParams,
        policy: AugmentPolicy,
        seed: u64,
        index: usize,
    ) -> tsp_tta_core::Result<DecodedTour> {
        match *self {
            DecoderChoice::Greedy => decode_greedy(inst, config, params),
            DecoderChoice::Beam(b) => decode_beam(inst, config, params, BeamConfig::new(b)?),
            DecoderChoice::Tta(m) => {
                let tta = TtaConfig::new(m, policy, seed)?.for_instance(index);
                Ok(tta_solve(inst, config, params, &tta, &Sequential)?.best)
            }
        }
    }
}
