use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::ModelConfig;
use crate::autodiff::Tensor;
use crate::math;
use crate::rng::seeded;
use crate::{Error, Result};

const START_TOKEN_STD: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Init {
    /// Uniform in `±1/√fan_in`.
    Uniform { fan_in: usize },
    Ones,
    Zeros,
    StartToken,
}

/// Name and shape of one learnable tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    init: Init,
}

fn linear(specs: &mut Vec<ParamSpec>, prefix: &str, fan_in: usize, fan_out: usize) {
    let init = Init::Uniform { fan_in };
    specs.push(ParamSpec {
        name: format!("{prefix}.weight"),
        shape: vec![fan_in, fan_out],
        init,
    });
    specs.push(ParamSpec {
        name: format!("{prefix}.bias"),
        shape: vec![fan_out],
        init,
    });
}

fn norm(specs: &mut Vec<ParamSpec>, prefix: &str, d: usize) {
    specs.push(ParamSpec {
        name: format!("{prefix}.gain"),
        shape: vec![d],
        init: Init::Ones,
    });
    specs.push(ParamSpec {
        name: format!("{prefix}.bias"),
        shape: vec![d],
        init: Init::Zeros,
    });
}

fn attention(specs: &mut Vec<ParamSpec>, prefix: &str, d: usize) {
    for part in ["q", "k", "v", "o"] {
        linear(specs, &format!("{prefix}.{part}"), d, d);
    }
}

/// Every parameter of the architecture, in canonical (checkpoint) order.
pub(crate) fn schema(config: &ModelConfig) -> Vec<ParamSpec> {
    let d = config.d_model;
    let width = config.input_width();
    let mut specs = Vec::new();
    linear(&mut specs, "embed", width, d);
    specs.push(ParamSpec {
        name: "start".into(),
        shape: vec![1, width],
        init: Init::StartToken,
    });
    for l in 0..config.n_enc_layers {
        attention(&mut specs, &format!("enc.{l}.attn"), d);
        norm(&mut specs, &format!("enc.{l}.norm1"), d);
        linear(&mut specs, &format!("enc.{l}.ff1"), d, config.d_ff);
        linear(&mut specs, &format!("enc.{l}.ff2"), config.d_ff, d);
        norm(&mut specs, &format!("enc.{l}.norm2"), d);
    }
    for l in 0..config.n_dec_layers {
        attention(&mut specs, &format!("dec.{l}.self"), d);
        norm(&mut specs, &format!("dec.{l}.norm1"), d);
        attention(&mut specs, &format!("dec.{l}.cross"), d);
        norm(&mut specs, &format!("dec.{l}.norm2"), d);
        linear(&mut specs, &format!("dec.{l}.ff1"), d, config.d_ff);
        linear(&mut specs, &format!("dec.{l}.ff2"), config.d_ff, d);
        norm(&mut specs, &format!("dec.{l}.norm3"), d);
    }
    linear(&mut specs, "out", d, config.n_cities);
    specs
}

/// All learnable tensors of a policy, keyed by name.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    tensors: BTreeMap<String, Tensor>,
}

impl PolicyParams {
    /// Fresh parameters, deterministic in `seed`.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded(seed);
        let mut tensors = BTreeMap::new();
        for spec in schema(config) {
            let len: usize = spec.shape.iter().product();
            let data: Vec<f64> = match spec.init {
                Init::Uniform { fan_in } => {
                    let bound = 1.0 / math::sqrt(fan_in as f64);
                    (0..len).map(|_| rng.random_range(-bound..bound)).collect()
                }
                Init::Ones => vec![1.0; len],
                Init::Zeros => vec![0.0; len],
                Init::StartToken => (0..len)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        START_TOKEN_STD * z
                    })
                    .collect(),
            };
            tensors.insert(spec.name, Tensor::new(spec.shape, data)?);
        }
        Ok(PolicyParams { tensors })
    }

    /// Same names and shapes as `config` requires, all zero.
    pub fn zeros(config: &ModelConfig) -> Self {
        let tensors = schema(config)
            .into_iter()
            .map(|s| {
                let t = Tensor::zeros(&s.shape);
                (s.name, t)
            })
            .collect();
        PolicyParams { tensors }
    }

    /// Builds from named tensors, checking them against the architecture.
    pub fn from_tensors(config: &ModelConfig, tensors: BTreeMap<String, Tensor>) -> Result<Self> {
        let params = PolicyParams { tensors };
        params.check(config)?;
        Ok(params)
    }

    #[cfg(test)]
    pub(crate) fn from_raw(tensors: BTreeMap<String, Tensor>) -> Self {
        PolicyParams { tensors }
    }

    /// Every schema name present exactly once with the schema's shape.
    pub fn check(&self, config: &ModelConfig) -> Result<()> {
        config.validate()?;
        let specs = schema(config);
        if specs.len() != self.tensors.len() {
            return Err(Error::Config(format!(
                "expected {} parameter tensors, found {}",
                specs.len(),
                self.tensors.len()
            )));
        }
        for spec in specs {
            let t = self
                .tensors
                .get(&spec.name)
                .ok_or_else(|| Error::MissingParam(spec.name.clone()))?;
            if t.shape() != spec.shape.as_slice() {
                return Err(Error::Shape {
                    op: "params",
                    detail: format!("{} has shape {:?}, expected {:?}", spec.name, t.shape(), spec.shape),
                });
            }
        }
        Ok(())
    }

    /// Names and shapes in canonical order.
    pub fn manifest(config: &ModelConfig) -> Vec<ParamSpec> {
        schema(config)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.get_mut(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.tensors.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    /// `self += scale · other`, name by name.
    pub fn add_scaled(&mut self, other: &PolicyParams, scale: f64) {
        for (name, t) in self.tensors.iter_mut() {
            if let Some(o) = other.tensors.get(name) {
                for (a, b) in t.data_mut().iter_mut().zip(o.data()) {
                    *a += scale * b;
                }
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors.values_mut() {
            for v in t.data_mut() {
                *v *= factor;
            }
        }
    }

    /// Euclidean norm over every scalar.
    pub fn global_norm(&self) -> f64 {
        let sq: f64 = self
            .tensors
            .values()
            .flat_map(|t| t.data().iter())
            .map(|v| v * v)
            .sum();
        math::sqrt(sq)
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.values().all(Tensor::all_finite)
    }
}
