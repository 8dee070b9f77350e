use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::params::schema;
use super::{InputMode, ModelConfig, PolicyParams};
use crate::autodiff::{Gradients, Graph, Tensor, Var};
use crate::math;
use crate::tsp::TspInstance;
use crate::{Error, Result};

/// Sinusoidal code for position `t`: `sin(t / 10000^(2j/d))` at index `2j`,
/// `cos(t / 10000^(2j/d))` at index `2j + 1`.
pub fn positional_encoding(t: usize, d_model: usize) -> Vec<f64> {
    (0..d_model)
        .map(|i| {
            let pair = (i / 2 * 2) as f64;
            let angle = t as f64 / math::powf(10_000.0, pair / d_model as f64);
            if i % 2 == 0 {
                math::sin(angle)
            } else {
                math::cos(angle)
            }
        })
        .collect()
}

fn pe_rows(first: usize, count: usize, d_model: usize) -> Tensor {
    let data = (first..first + count)
        .flat_map(|t| positional_encoding(t, d_model))
        .collect();
    Tensor::matrix(count, d_model, data).expect("rows × d_model values")
}

/// Per-city encoder input, `N × width`: distance-matrix columns or coordinates.
pub fn model_input(inst: &TspInstance, config: &ModelConfig) -> Result<Tensor> {
    if inst.n() != config.n_cities {
        return Err(Error::SizeMismatch {
            expected: config.n_cities,
            got: inst.n(),
        });
    }
    let n = inst.n();
    match config.input_mode {
        InputMode::DistanceMatrix => {
            let d = inst.distance_matrix();
            let mut data = Vec::with_capacity(n * n);
            for i in 0..n {
                data.extend_from_slice(d.column(i));
            }
            Tensor::matrix(n, n, data)
        }
        InputMode::Coordinates => {
            let data = inst.coords().iter().flat_map(|p| p.iter().copied()).collect();
            Tensor::matrix(n, 2, data)
        }
    }
}

/// Encoder output: row 0 is the start slot, row `i + 1` belongs to city `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderMemory(pub Tensor);

impl EncoderMemory {
    pub fn rows(&self) -> usize {
        self.0.shape()[0]
    }
}

/// Next-city probabilities; visited cities hold exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    pub probs: Vec<f64>,
}

impl StepDistribution {
    /// Most likely city, lowest index on ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy)]
struct Linear {
    weight: Var,
    bias: Var,
}

impl Linear {
    fn apply(&self, g: &mut Graph, x: Var) -> Result<Var> {
        let y = g.matmul(x, self.weight)?;
        g.add_row(y, self.bias)
    }
}

#[derive(Debug, Clone, Copy)]
struct Norm {
    gain: Var,
    bias: Var,
}

impl Norm {
    fn apply(&self, g: &mut Graph, x: Var) -> Result<Var> {
        g.layer_norm(x, self.gain, self.bias)
    }
}

#[derive(Debug, Clone, Copy)]
struct Attention {
    q: Linear,
    k: Linear,
    v: Linear,
    o: Linear,
}

#[derive(Debug, Clone, Copy)]
struct EncoderLayer {
    attn: Attention,
    norm1: Norm,
    ff1: Linear,
    ff2: Linear,
    norm2: Norm,
}

#[derive(Debug, Clone, Copy)]
struct DecoderLayer {
    self_attn: Attention,
    norm1: Norm,
    cross: Attention,
    norm2: Norm,
    ff1: Linear,
    ff2: Linear,
    norm3: Norm,
}

/// Parameters inserted into a graph, with structured handles.
#[derive(Debug)]
struct Bound {
    named: Vec<(String, Var)>,
    embed: Linear,
    start: Var,
    enc: Vec<EncoderLayer>,
    dec: Vec<DecoderLayer>,
    out: Linear,
}

fn bind(g: &mut Graph, params: &PolicyParams, config: &ModelConfig) -> Result<Bound> {
    let mut named = Vec::new();
    let mut lookup = BTreeMap::new();
    for spec in schema(config) {
        let t = params
            .get(&spec.name)
            .ok_or_else(|| Error::MissingParam(spec.name.clone()))?;
        if t.shape() != spec.shape.as_slice() {
            return Err(Error::Shape {
                op: "bind",
                detail: format!("{} has shape {:?}, expected {:?}", spec.name, t.shape(), spec.shape),
            });
        }
        let v = g.leaf(t.clone());
        lookup.insert(spec.name.clone(), v);
        named.push((spec.name, v));
    }
    let var = |name: String| lookup[&name];
    let linear = |p: &str| Linear {
        weight: var(format!("{p}.weight")),
        bias: var(format!("{p}.bias")),
    };
    let norm = |p: &str| Norm {
        gain: var(format!("{p}.gain")),
        bias: var(format!("{p}.bias")),
    };
    let attention = |p: &str| Attention {
        q: linear(&format!("{p}.q")),
        k: linear(&format!("{p}.k")),
        v: linear(&format!("{p}.v")),
        o: linear(&format!("{p}.o")),
    };
    let enc = (0..config.n_enc_layers)
        .map(|l| EncoderLayer {
            attn: attention(&format!("enc.{l}.attn")),
            norm1: norm(&format!("enc.{l}.norm1")),
            ff1: linear(&format!("enc.{l}.ff1")),
            ff2: linear(&format!("enc.{l}.ff2")),
            norm2: norm(&format!("enc.{l}.norm2")),
        })
        .collect();
    let dec = (0..config.n_dec_layers)
        .map(|l| DecoderLayer {
            self_attn: attention(&format!("dec.{l}.self")),
            norm1: norm(&format!("dec.{l}.norm1")),
            cross: attention(&format!("dec.{l}.cross")),
            norm2: norm(&format!("dec.{l}.norm2")),
            ff1: linear(&format!("dec.{l}.ff1")),
            ff2: linear(&format!("dec.{l}.ff2")),
            norm3: norm(&format!("dec.{l}.norm3")),
        })
        .collect();
    Ok(Bound {
        embed: linear("embed"),
        start: var("start".into()),
        out: linear("out"),
        enc,
        dec,
        named,
    })
}

/// Scaled dot-product attention of already-projected queries, keys and values,
/// split into `heads` column blocks and re-joined.
fn multi_head(g: &mut Graph, q: Var, k: Var, v: Var, heads: usize) -> Result<Var> {
    let d = g.value(q).last_dim();
    let dh = d / heads;
    let scale = 1.0 / math::sqrt(dh as f64);
    let mut outs = Vec::with_capacity(heads);
    for h in 0..heads {
        let (qh, kh, vh) = if heads == 1 {
            (q, k, v)
        } else {
            (
                g.slice_cols(q, h * dh, dh)?,
                g.slice_cols(k, h * dh, dh)?,
                g.slice_cols(v, h * dh, dh)?,
            )
        };
        let kt = g.transpose(kh)?;
        let scores = g.matmul(qh, kt)?;
        let scores = g.mul_scalar(scores, scale);
        let weights = g.softmax(scores, None)?;
        outs.push(g.matmul(weights, vh)?);
    }
    if heads == 1 {
        Ok(outs[0])
    } else {
        g.concat(&outs, 1)
    }
}

/// Decoding progress: attention caches, visited set, and the distribution for
/// the next choice. Cheap to clone (it only holds graph handles), which is what
/// beam search relies on.
#[derive(Debug, Clone)]
pub struct DecoderState {
    caches: Vec<Option<(Var, Var)>>,
    visited: Vec<bool>,
    partial: Vec<usize>,
    probs: Option<Var>,
    log_prob: f64,
    log_prob_var: Option<Var>,
}

impl DecoderState {
    pub fn partial(&self) -> &[usize] {
        &self.partial
    }

    pub fn visited(&self) -> &[bool] {
        &self.visited
    }

    pub fn is_complete(&self) -> bool {
        self.probs.is_none()
    }

    /// Sum of the log-probabilities of the choices made so far.
    pub fn log_prob(&self) -> f64 {
        self.log_prob
    }

    /// Differentiable counterpart of [`DecoderState::log_prob`], present when
    /// choices were made with tracking enabled.
    pub fn log_prob_var(&self) -> Option<Var> {
        self.log_prob_var
    }
}

/// One forward pass of the policy on one instance: parameters bound into a
/// fresh graph, the encoder evaluated, and an incremental decoder on top.
pub struct PolicyPass<'a> {
    graph: Graph,
    config: &'a ModelConfig,
    bound: Bound,
    embedded: Var,
    memory: Var,
    cross: Vec<(Var, Var)>,
}

impl<'a> PolicyPass<'a> {
    pub fn new(inst: &TspInstance, config: &'a ModelConfig, params: &PolicyParams) -> Result<Self> {
        let input = model_input(inst, config)?;
        Self::from_input(input, config, params)
    }

    /// Runs the encoder on an explicit `N × width` input matrix.
    pub fn from_input(input: Tensor, config: &'a ModelConfig, params: &PolicyParams) -> Result<Self> {
        config.validate()?;
        if input.shape() != [config.n_cities, config.input_width()] {
            return Err(Error::Shape {
                op: "embed_inputs",
                detail: format!(
                    "input {:?}, expected [{}, {}]",
                    input.shape(),
                    config.n_cities,
                    config.input_width()
                ),
            });
        }
        let mut g = Graph::new();
        let bound = bind(&mut g, params, config)?;
        let x = g.leaf(input);
        let tokens = g.concat(&[bound.start, x], 0)?;
        let mut h = bound.embed.apply(&mut g, tokens)?;
        if config.use_pe {
            let pe = g.leaf(pe_rows(0, config.n_cities + 1, config.d_model));
            h = g.add(h, pe)?;
        }
        let embedded = h;
        for layer in &bound.enc {
            let q = layer.attn.q.apply(&mut g, h)?;
            let k = layer.attn.k.apply(&mut g, h)?;
            let v = layer.attn.v.apply(&mut g, h)?;
            let a = multi_head(&mut g, q, k, v, config.n_heads)?;
            let a = layer.attn.o.apply(&mut g, a)?;
            let r = g.add(h, a)?;
            let h1 = layer.norm1.apply(&mut g, r)?;
            let f = layer.ff1.apply(&mut g, h1)?;
            let f = g.relu(f);
            let f = layer.ff2.apply(&mut g, f)?;
            let r = g.add(h1, f)?;
            h = layer.norm2.apply(&mut g, r)?;
        }
        let memory = h;
        let mut cross = Vec::with_capacity(bound.dec.len());
        for layer in &bound.dec {
            let k = layer.cross.k.apply(&mut g, memory)?;
            let v = layer.cross.v.apply(&mut g, memory)?;
            cross.push((k, v));
        }
        Ok(PolicyPass {
            graph: g,
            config,
            bound,
            embedded,
            memory,
            cross,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        self.config
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn graph_mut(&mut self) -> &mut Graph {
        &mut self.graph
    }

    /// Embedded encoder input, `(N + 1) × d_model`.
    pub fn embedded(&self) -> &Tensor {
        self.graph.value(self.embedded)
    }

    pub fn memory(&self) -> EncoderMemory {
        EncoderMemory(self.graph.value(self.memory).clone())
    }

    /// Parameter handles in canonical order.
    pub fn param_vars(&self) -> &[(String, Var)] {
        &self.bound.named
    }

    /// Collects per-parameter gradients; parameters the loss does not reach get zeros.
    pub fn param_grads(&self, grads: &Gradients) -> PolicyParams {
        let mut out = PolicyParams::zeros(self.config);
        for (name, v) in &self.bound.named {
            if let (Some(g), Some(slot)) = (grads.get(*v), out.get_mut(name)) {
                *slot = g.clone();
            }
        }
        out
    }

    /// Decoder state before any city is chosen, with the first distribution ready.
    pub fn start(&mut self) -> Result<DecoderState> {
        let n = self.config.n_cities;
        let mut state = DecoderState {
            caches: vec![None; self.bound.dec.len()],
            visited: vec![false; n],
            partial: Vec::with_capacity(n),
            probs: None,
            log_prob: 0.0,
            log_prob_var: None,
        };
        let token = self.graph.gather_rows(self.memory, &[0])?;
        state.probs = Some(self.feed(&mut state, token)?);
        Ok(state)
    }

    /// Probabilities for the next choice, or `None` once the tour is complete.
    pub fn probs(&self, state: &DecoderState) -> Option<&[f64]> {
        state.probs.map(|p| self.graph.value(p).data())
    }

    pub fn distribution(&self, state: &DecoderState) -> Result<StepDistribution> {
        self.probs(state)
            .map(|p| StepDistribution { probs: p.to_vec() })
            .ok_or_else(|| Error::Config("every city is already visited".into()))
    }

    /// Appends `city` to the tour. With `track` set, the log-probability of the
    /// choice is added to the differentiable running total.
    pub fn choose(&mut self, state: &DecoderState, city: usize, track: bool) -> Result<DecoderState> {
        let n = self.config.n_cities;
        let probs = state
            .probs
            .ok_or_else(|| Error::Config("every city is already visited".into()))?;
        if city >= n {
            return Err(Error::OutOfRange { index: city, limit: n });
        }
        if state.visited[city] {
            return Err(Error::Config(format!("city {city} is already visited")));
        }
        let p = self.graph.value(probs).data()[city];
        let mut next = state.clone();
        next.log_prob += math::ln(p);
        if track {
            let picked = self.graph.pick(probs, city)?;
            let lp = self.graph.log(picked)?;
            next.log_prob_var = Some(match state.log_prob_var {
                Some(prev) => self.graph.add(prev, lp)?,
                None => lp,
            });
        }
        next.visited[city] = true;
        next.partial.push(city);
        next.probs = None;
        if next.partial.len() < n {
            let token = self.graph.gather_rows(self.memory, &[city + 1])?;
            next.probs = Some(self.feed(&mut next, token)?);
        }
        Ok(next)
    }

    /// Runs one new decoder position through every layer, extending the
    /// self-attention caches, and returns the masked next-city distribution.
    fn feed(&mut self, state: &mut DecoderState, token: Var) -> Result<Var> {
        let g = &mut self.graph;
        let heads = self.config.n_heads;
        let t = state.partial.len();
        let mut x = token;
        if self.config.use_pe {
            let pe = g.leaf(pe_rows(t, 1, self.config.d_model));
            x = g.add(x, pe)?;
        }
        for (l, layer) in self.bound.dec.iter().enumerate() {
            let k_new = layer.self_attn.k.apply(g, x)?;
            let v_new = layer.self_attn.v.apply(g, x)?;
            let (keys, values) = match state.caches[l] {
                Some((k, v)) => (g.concat(&[k, k_new], 0)?, g.concat(&[v, v_new], 0)?),
                None => (k_new, v_new),
            };
            state.caches[l] = Some((keys, values));
            let q = layer.self_attn.q.apply(g, x)?;
            let a = multi_head(g, q, keys, values, heads)?;
            let a = layer.self_attn.o.apply(g, a)?;
            let r = g.add(x, a)?;
            let h1 = layer.norm1.apply(g, r)?;

            let (mk, mv) = self.cross[l];
            let q = layer.cross.q.apply(g, h1)?;
            let c = multi_head(g, q, mk, mv, heads)?;
            let c = layer.cross.o.apply(g, c)?;
            let r = g.add(h1, c)?;
            let h2 = layer.norm2.apply(g, r)?;

            let f = layer.ff1.apply(g, h2)?;
            let f = g.relu(f);
            let f = layer.ff2.apply(g, f)?;
            let r = g.add(h2, f)?;
            x = layer.norm3.apply(g, r)?;
        }
        let logits = self.bound.out.apply(g, x)?;
        g.softmax(logits, Some(&state.visited))
    }
}

/// Encoder memory for `inst`.
pub fn encode_instance(inst: &TspInstance, config: &ModelConfig, params: &PolicyParams) -> Result<EncoderMemory> {
    Ok(PolicyPass::new(inst, config, params)?.memory())
}

/// Next-city distribution after the cities in `partial` have been visited.
pub fn decode_step(
    inst: &TspInstance,
    config: &ModelConfig,
    params: &PolicyParams,
    partial: &[usize],
) -> Result<StepDistribution> {
    if partial.len() >= config.n_cities {
        return Err(Error::Config("every city is already visited".into()));
    }
    let mut pass = PolicyPass::new(inst, config, params)?;
    let mut state = pass.start()?;
    for &c in partial {
        state = pass.choose(&state, c, false)?;
    }
    pass.distribution(&state)
}
