use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::{Error, Result};

/// What each city token carries into the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputMode {
    /// The city's column of the distance matrix (width `N`).
    DistanceMatrix,
    /// The city's raw `(x, y)` coordinates (width 2).
    Coordinates,
}

impl fmt::Display for InputMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputMode::DistanceMatrix => "distance-matrix",
            InputMode::Coordinates => "coordinates",
        })
    }
}

impl FromStr for InputMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distance-matrix" => Ok(InputMode::DistanceMatrix),
            "coordinates" => Ok(InputMode::Coordinates),
            other => Err(Error::Config(format!("unknown input_mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    /// Fixed city count; a model only accepts instances of this size.
    pub n_cities: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub n_enc_layers: usize,
    pub n_dec_layers: usize,
    pub d_ff: usize,
    pub input_mode: InputMode,
    pub use_pe: bool,
}

impl ModelConfig {
    /// Small default: 64-wide, 4 heads, 2 encoder layers, 1 decoder layer.
    pub fn desk_scale(n_cities: usize) -> Self {
        ModelConfig {
            n_cities,
            d_model: 64,
            n_heads: 4,
            n_enc_layers: 2,
            n_dec_layers: 1,
            d_ff: 256,
            input_mode: InputMode::DistanceMatrix,
            use_pe: true,
        }
    }

    /// Large configuration: 512-wide, 8 heads, 6 encoder and 2 decoder layers.
    pub fn full_scale(n_cities: usize) -> Self {
        ModelConfig {
            n_cities,
            d_model: 512,
            n_heads: 8,
            n_enc_layers: 6,
            n_dec_layers: 2,
            d_ff: 2048,
            input_mode: InputMode::DistanceMatrix,
            use_pe: true,
        }
    }

    pub fn input_width(&self) -> usize {
        match self.input_mode {
            InputMode::DistanceMatrix => self.n_cities,
            InputMode::Coordinates => 2,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cities < 2 {
            return Err(Error::InvalidSize(self.n_cities));
        }
        if self.d_model < 2 || self.n_heads == 0 || self.d_ff == 0 {
            return Err(Error::Config("d_model ≥ 2, n_heads ≥ 1 and d_ff ≥ 1 required".into()));
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return Err(Error::Config(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if self.n_cities > u16::MAX as usize {
            return Err(Error::Config(format!("n_cities {} is too large", self.n_cities)));
        }
        Ok(())
    }

    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("n_cities", self.n_cities.to_string()),
            ("d_model", self.d_model.to_string()),
            ("n_heads", self.n_heads.to_string()),
            ("n_enc_layers", self.n_enc_layers.to_string()),
            ("n_dec_layers", self.n_dec_layers.to_string()),
            ("d_ff", self.d_ff.to_string()),
            ("input_mode", self.input_mode.to_string()),
            ("use_pe", self.use_pe.to_string()),
        ]
    }

    /// Applies `key=value` settings on top of `self`; unknown keys are rejected.
    pub fn apply_pair(&mut self, key: &str, value: &str) -> Result<()> {
        fn num(key: &str, value: &str) -> Result<usize> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("{key}: '{value}' is not a count")))
        }
        match key {
            "n_cities" => self.n_cities = num(key, value)?,
            "d_model" => self.d_model = num(key, value)?,
            "n_heads" => self.n_heads = num(key, value)?,
            "n_enc_layers" => self.n_enc_layers = num(key, value)?,
            "n_dec_layers" => self.n_dec_layers = num(key, value)?,
            "d_ff" => self.d_ff = num(key, value)?,
            "input_mode" => self.input_mode = value.parse()?,
            "use_pe" => {
                self.use_pe = value
                    .parse()
                    .map_err(|_| Error::Config(format!("use_pe: '{value}' is not a boolean")))?
            }
            other => return Err(Error::Config(format!("unknown model key '{other}'"))),
        }
        Ok(())
    }

    pub fn is_model_key(key: &str) -> bool {
        matches!(
            key,
            "n_cities" | "d_model" | "n_heads" | "n_enc_layers" | "n_dec_layers" | "d_ff" | "input_mode" | "use_pe"
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heads_must_divide_width() {
        let mut c = ModelConfig::desk_scale(10);
        assert!(c.validate().is_ok());
        c.n_heads = 5;
        assert!(c.validate().is_err());
        assert!(ModelConfig::full_scale(50).validate().is_ok());
    }

    #[test]
    fn input_width_follows_mode() {
        let mut c = ModelConfig::desk_scale(7);
        assert_eq!(c.input_width(), 7);
        c.input_mode = InputMode::Coordinates;
        assert_eq!(c.input_width(), 2);
    }

    #[test]
    fn pairs_round_trip() {
        let mut c = ModelConfig::desk_scale(12);
        c.input_mode = InputMode::Coordinates;
        c.use_pe = false;
        let mut d = ModelConfig::desk_scale(3);
        for (k, v) in c.to_pairs() {
            d.apply_pair(k, &v).unwrap();
        }
        assert_eq!(c, d);
        assert!(d.apply_pair("dropout", "0.1").is_err());
        assert!(d.apply_pair("d_model", "wide").is_err());
    }
}
