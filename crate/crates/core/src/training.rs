//! REINFORCE with a frozen best-so-far greedy baseline.
//!
//! For every training instance one tour is sampled from the current policy and
//! compared with the greedy tour of the baseline parameters; the difference in
//! length is the advantage. Descending the surrogate `advantage · log p(tour)`
//! makes tours longer than the baseline less likely; the advantage is a plain
//! number, so gradients only flow through the log-probability. The baseline is replaced whenever the current parameters
//! achieve a lower mean greedy length on a held-out validation set.

use alloc::format;
use alloc::vec::Vec;

use crate::decoding::{greedy_rollout, sample_rollout};
use crate::exec::Executor;
use crate::math;
use crate::model::{ModelConfig, PolicyParams, PolicyPass};
use crate::rng::{derive_seed, seeded};
use crate::tsp::{TspInstance, Tour};
use crate::{Error, Result};

const INSTANCE_STREAM: u64 = 0x5EED_0001;
const SAMPLE_STREAM: u64 = 0x5EED_0002;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// When the baseline parameters are replaced by the current ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineRule {
    /// Any strict improvement of the mean greedy validation length.
    MeanImprovement,
    /// Never replace (the baseline stays at the initial parameters).
    Frozen,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub instances_per_epoch: usize,
    pub val_size: usize,
    pub adam: AdamConfig,
    /// Global-norm gradient clip; `None` disables clipping.
    pub grad_clip: Option<f64>,
    pub baseline_rule: BaselineRule,
    pub seed: u64,
}

impl TrainConfig {
    /// 30 epochs of 2 000 fresh instances, batches of 64, lr 5e-4, clip 1.0.
    pub fn desk_scale() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 64,
            instances_per_epoch: 2_000,
            val_size: 200,
            adam: AdamConfig {
                learning_rate: 5e-4,
                ..AdamConfig::default()
            },
            grad_clip: Some(1.0),
            baseline_rule: BaselineRule::MeanImprovement,
            seed: 1,
        }
    }

    /// 100 epochs of 100 000 instances with batches of 512, lr 1e-4.
    pub fn full_scale() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 512,
            instances_per_epoch: 100_000,
            val_size: 10_000,
            adam: AdamConfig::default(),
            ..Self::desk_scale()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.instances_per_epoch == 0 || self.val_size == 0 {
            return Err(Error::Config("batch_size, instances_per_epoch and val_size must be positive".into()));
        }
        let positive = |x: f64| x > 0.0;
        if !positive(self.adam.learning_rate) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.adam.beta1) || !(0.0..1.0).contains(&self.adam.beta2) || !positive(self.adam.eps) {
            return Err(Error::Config("adam betas must lie in [0, 1) and eps must be positive".into()));
        }
        if let Some(c) = self.grad_clip {
            if !positive(c) {
                return Err(Error::Config("grad_clip must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn apply_pair(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: core::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
        }
        match key {
            "epochs" => self.epochs = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "instances_per_epoch" => self.instances_per_epoch = parse(key, value)?,
            "val_size" => self.val_size = parse(key, value)?,
            "learning_rate" => self.adam.learning_rate = parse(key, value)?,
            "beta1" => self.adam.beta1 = parse(key, value)?,
            "beta2" => self.adam.beta2 = parse(key, value)?,
            "eps" => self.adam.eps = parse(key, value)?,
            "grad_clip" => {
                self.grad_clip = match value {
                    "none" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "baseline_rule" => {
                self.baseline_rule = match value {
                    "mean-improvement" => BaselineRule::MeanImprovement,
                    "frozen" => BaselineRule::Frozen,
                    other => return Err(Error::Config(format!("unknown baseline_rule '{other}'"))),
                }
            }
            "seed" => self.seed = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown training key '{other}'"))),
        }
        Ok(())
    }
}

/// First and second moment estimates for Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: PolicyParams,
    pub v: PolicyParams,
    pub t: u64,
}

impl AdamState {
    pub fn new(config: &ModelConfig) -> Self {
        AdamState {
            m: PolicyParams::zeros(config),
            v: PolicyParams::zeros(config),
            t: 0,
        }
    }

    /// Zeroed state shaped like `params` (which need not follow a model schema).
    pub fn like(params: &PolicyParams) -> Self {
        let mut m = params.clone();
        m.scale(0.0);
        AdamState {
            v: m.clone(),
            m,
            t: 0,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(params: &mut PolicyParams, grads: &PolicyParams, state: &mut AdamState, hp: &AdamConfig) {
    state.t += 1;
    let c1 = 1.0 - math::powf(hp.beta1, state.t as f64);
    let c2 = 1.0 - math::powf(hp.beta2, state.t as f64);
    for (name, p) in params.iter_mut() {
        let (Some(g), Some(m), Some(v)) = (grads.get(name), state.m.get_mut(name), state.v.get_mut(name)) else {
            continue;
        };
        let (gd, md, vd) = (g.data(), m.data_mut(), v.data_mut());
        for (i, w) in p.data_mut().iter_mut().enumerate() {
            md[i] = hp.beta1 * md[i] + (1.0 - hp.beta1) * gd[i];
            vd[i] = hp.beta2 * vd[i] + (1.0 - hp.beta2) * gd[i] * gd[i];
            let m_hat = md[i] / c1;
            let v_hat = vd[i] / c2;
            *w -= hp.learning_rate * m_hat / (math::sqrt(v_hat) + hp.eps);
        }
    }
}

/// Frozen parameter copy whose greedy tours centre the advantage.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineParams {
    params: PolicyParams,
    val_mean: f64,
}

impl BaselineParams {
    pub fn new(params: PolicyParams, val_mean: f64) -> Self {
        BaselineParams { params, val_mean }
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    /// Mean greedy validation length recorded when this baseline was adopted.
    pub fn val_mean(&self) -> f64 {
        self.val_mean
    }
}

/// Log-probability of a fixed tour under the policy.
pub fn tour_log_prob(inst: &TspInstance, config: &ModelConfig, params: &PolicyParams, tour: &Tour) -> Result<f64> {
    let mut pass = PolicyPass::new(inst, config, params)?;
    let mut state = pass.start()?;
    for &c in tour.order() {
        state = pass.choose(&state, c, false)?;
    }
    Ok(state.log_prob())
}

/// Log-probability of a fixed tour and its gradient with respect to every parameter.
pub fn tour_log_prob_grad(
    inst: &TspInstance,
    config: &ModelConfig,
    params: &PolicyParams,
    tour: &Tour,
) -> Result<(f64, PolicyParams)> {
    let mut pass = PolicyPass::new(inst, config, params)?;
    let mut state = pass.start()?;
    for &c in tour.order() {
        state = pass.choose(&state, c, true)?;
    }
    let lp = state.log_prob_var().ok_or(Error::Empty("tour"))?;
    let grads = pass.graph().backward(lp)?;
    Ok((state.log_prob(), pass.param_grads(&grads)))
}

/// Contribution of one instance to a REINFORCE batch.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub tour: Tour,
    pub sampled_len: f64,
    pub baseline_len: f64,
    pub log_prob: f64,
    /// `(sampled_len − baseline_len) · log_prob`.
    pub surrogate: f64,
    /// Gradient of the surrogate; `None` when the advantage is exactly zero.
    pub grads: Option<PolicyParams>,
}

pub fn reinforce_instance(
    inst: &TspInstance,
    config: &ModelConfig,
    params: &PolicyParams,
    baseline: &PolicyParams,
    sample_seed: u64,
) -> Result<Rollout> {
    let baseline_len = {
        let mut pass = PolicyPass::new(inst, config, baseline)?;
        let state = greedy_rollout(&mut pass, false)?;
        Tour::new(state.partial().to_vec())?.length(inst)?
    };
    let mut pass = PolicyPass::new(inst, config, params)?;
    let state = sample_rollout(&mut pass, &mut seeded(sample_seed), true)?;
    let tour = Tour::new(state.partial().to_vec())?;
    let sampled_len = tour.length(inst)?;
    let advantage = sampled_len - baseline_len;
    let log_prob = state.log_prob();
    let grads = if advantage == 0.0 {
        None
    } else {
        let lp = state.log_prob_var().ok_or(Error::Empty("tour"))?;
        let g = pass.graph_mut();
        // The advantage enters as a plain number: no gradient reaches the lengths.
        let loss = g.mul_scalar(lp, advantage);
        let grads = g.backward(loss)?;
        Some(pass.param_grads(&grads))
    };
    Ok(Rollout {
        tour,
        sampled_len,
        baseline_len,
        log_prob,
        surrogate: advantage * log_prob,
        grads,
    })
}

#[derive(Debug, Clone)]
pub struct BatchOutcome {
    /// Mean surrogate loss over the batch.
    pub loss: f64,
    /// Gradient of the mean surrogate loss.
    pub grads: PolicyParams,
    pub mean_sampled_len: f64,
    pub mean_baseline_len: f64,
}

/// Surrogate loss and gradient for a batch; `sample_seeds[k]` drives the
/// sampled rollout of `batch[k]`.
pub fn reinforce_batch<E: Executor>(
    config: &ModelConfig,
    params: &PolicyParams,
    baseline: &BaselineParams,
    batch: &[TspInstance],
    sample_seeds: &[u64],
    exec: &E,
) -> Result<BatchOutcome> {
    if batch.is_empty() || batch.len() != sample_seeds.len() {
        return Err(Error::Empty("reinforce batch"));
    }
    if let Some(bad) = batch.iter().find(|i| i.n() != config.n_cities) {
        return Err(Error::SizeMismatch {
            expected: config.n_cities,
            got: bad.n(),
        });
    }
    let jobs: Vec<(&TspInstance, u64)> = batch.iter().zip(sample_seeds.iter().copied()).collect();
    let rollouts = exec.map(jobs, |(inst, seed)| {
        reinforce_instance(inst, config, params, baseline.params(), seed)
    });
    let scale = 1.0 / batch.len() as f64;
    let mut grads = PolicyParams::zeros(config);
    let (mut loss, mut sampled, mut base) = (0.0, 0.0, 0.0);
    for r in rollouts {
        let r = r?;
        loss += r.surrogate * scale;
        sampled += r.sampled_len * scale;
        base += r.baseline_len * scale;
        if let Some(g) = &r.grads {
            grads.add_scaled(g, scale);
        }
    }
    Ok(BatchOutcome {
        loss,
        grads,
        mean_sampled_len: sampled,
        mean_baseline_len: base,
    })
}

/// Mean greedy tour length over `instances`.
pub fn mean_greedy_length<E: Executor>(
    config: &ModelConfig,
    params: &PolicyParams,
    instances: &[TspInstance],
    exec: &E,
) -> Result<f64> {
    if instances.is_empty() {
        return Err(Error::Empty("mean_greedy_length"));
    }
    let lens = exec.map(instances.iter().collect(), |inst| {
        crate::decoding::decode_greedy(inst, config, params).map(|d| d.length)
    });
    let mut total = 0.0;
    for l in lens {
        total += l?;
    }
    Ok(total / instances.len() as f64)
}

/// Adopts `params` as the new baseline if their mean greedy validation length
/// is strictly below the baseline's. Returns whether the baseline changed.
pub fn maybe_update_baseline<E: Executor>(
    config: &ModelConfig,
    params: &PolicyParams,
    baseline: &mut BaselineParams,
    val_set: &[TspInstance],
    exec: &E,
) -> Result<bool> {
    let current = mean_greedy_length(config, params, val_set, exec)?;
    Ok(adopt_if_better(params, current, baseline))
}

fn adopt_if_better(params: &PolicyParams, current_val: f64, baseline: &mut BaselineParams) -> bool {
    if current_val < baseline.val_mean {
        *baseline = BaselineParams::new(params.clone(), current_val);
        true
    } else {
        false
    }
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean length of the sampled training tours.
    pub train_len: f64,
    /// Mean greedy validation length of the parameters after the epoch.
    pub val_len: f64,
    /// Mean greedy validation length of the baseline after its update check.
    pub baseline_len: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: PolicyParams,
    pub baseline: BaselineParams,
    pub log: Vec<EpochLog>,
    /// Mean greedy validation length of the starting parameters.
    pub initial_val_len: f64,
}

/// Where each epoch's training instances come from.
#[derive(Debug, Clone, Copy)]
pub enum InstanceSource<'a> {
    /// Fresh uniform instances every epoch, derived from the training seed.
    Generated,
    /// Consecutive windows of a fixed dataset, wrapping around.
    Dataset(&'a [TspInstance]),
}

impl InstanceSource<'_> {
    fn epoch(&self, n: usize, cfg: &TrainConfig, epoch: usize) -> Result<Vec<TspInstance>> {
        match self {
            InstanceSource::Generated => (0..cfg.instances_per_epoch)
                .map(|k| {
                    let seed = derive_seed(cfg.seed, INSTANCE_STREAM + epoch as u64, k as u64);
                    TspInstance::generate(n, seed)
                })
                .collect(),
            InstanceSource::Dataset(data) => {
                if data.is_empty() {
                    return Err(Error::Empty("training dataset"));
                }
                let start = epoch * cfg.instances_per_epoch;
                Ok((0..cfg.instances_per_epoch)
                    .map(|k| data[(start + k) % data.len()].clone())
                    .collect())
            }
        }
    }
}

/// Validation instances derived from `seed`, disjoint from the training streams.
pub fn validation_set(n: usize, count: usize, seed: u64) -> Result<Vec<TspInstance>> {
    (0..count)
        .map(|k| TspInstance::generate(n, derive_seed(seed, 0x0000_5A1D, k as u64)))
        .collect()
}

/// Full training run. `on_epoch` sees every log row as soon as it is produced.
#[allow(clippy::too_many_arguments)]
pub fn train<E: Executor>(
    model: &ModelConfig,
    cfg: &TrainConfig,
    initial: PolicyParams,
    source: InstanceSource<'_>,
    val_set: &[TspInstance],
    exec: &E,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    initial.check(model)?;
    let mut params = initial;
    let initial_val_len = mean_greedy_length(model, &params, val_set, exec)?;
    let mut baseline = BaselineParams::new(params.clone(), initial_val_len);
    let mut adam = AdamState::new(model);
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let instances = source.epoch(model.n_cities, cfg, epoch)?;
        let mut sampled_total = 0.0;
        for (b, batch) in instances.chunks(cfg.batch_size).enumerate() {
            let first = b * cfg.batch_size;
            let seeds: Vec<u64> = (0..batch.len())
                .map(|k| derive_seed(cfg.seed, SAMPLE_STREAM + epoch as u64, (first + k) as u64))
                .collect();
            let mut out = reinforce_batch(model, &params, &baseline, batch, &seeds, exec)?;
            if !out.loss.is_finite() || !out.grads.all_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: b,
                    loss: out.loss,
                });
            }
            if let Some(clip) = cfg.grad_clip {
                let norm = out.grads.global_norm();
                if norm > clip {
                    out.grads.scale(clip / norm);
                }
            }
            adam_step(&mut params, &out.grads, &mut adam, &cfg.adam);
            sampled_total += out.mean_sampled_len * batch.len() as f64;
        }
        let val_len = mean_greedy_length(model, &params, val_set, exec)?;
        if cfg.baseline_rule == BaselineRule::MeanImprovement {
            adopt_if_better(&params, val_len, &mut baseline);
        }
        let row = EpochLog {
            epoch,
            train_len: sampled_total / instances.len() as f64,
            val_len,
            baseline_len: baseline.val_mean,
        };
        on_epoch(&row);
        log.push(row);
    }
    Ok(TrainOutcome {
        params,
        baseline,
        log,
        initial_val_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;
    use crate::exec::Sequential;
    use crate::model::InputMode;
    use alloc::collections::BTreeMap;
    use alloc::string::String;
    use alloc::vec;

    fn scalar_params(v: f64) -> PolicyParams {
        let mut map = BTreeMap::new();
        map.insert(String::from("w"), Tensor::vector(vec![v]));
        PolicyParams::from_raw(map)
    }

    fn tiny(n: usize) -> ModelConfig {
        ModelConfig {
            n_cities: n,
            d_model: 8,
            n_heads: 2,
            n_enc_layers: 1,
            n_dec_layers: 1,
            d_ff: 16,
            input_mode: InputMode::DistanceMatrix,
            use_pe: true,
        }
    }

    #[test]
    fn adam_with_zero_gradient_keeps_params() {
        let mut p = scalar_params(0.5);
        let mut state = AdamState::like(&p);
        state.m.get_mut("w").unwrap().data_mut()[0] = 0.2;
        state.v.get_mut("w").unwrap().data_mut()[0] = 0.04;
        state.t = 3;
        let before_m = 0.2;
        let zero = scalar_params(0.0);
        let hp = AdamConfig::default();
        // Parameters still move by the decaying momentum, but the moments shrink.
        adam_step(&mut p, &zero, &mut state, &hp);
        assert!(state.m.get("w").unwrap().data()[0].abs() < before_m);
        assert!(state.v.get("w").unwrap().data()[0] < 0.04);

        let mut fresh = scalar_params(0.5);
        let mut state = AdamState::like(&fresh);
        adam_step(&mut fresh, &zero, &mut state, &hp);
        assert_eq!(fresh.get("w").unwrap().data()[0], 0.5);
    }

    #[test]
    fn adam_first_step_moves_by_the_learning_rate() {
        let hp = AdamConfig {
            learning_rate: 0.01,
            ..AdamConfig::default()
        };
        for g in [3.0, -0.25] {
            let mut p = scalar_params(1.0);
            let mut state = AdamState::like(&p);
            adam_step(&mut p, &scalar_params(g), &mut state, &hp);
            let moved = p.get("w").unwrap().data()[0] - 1.0;
            assert!((moved + 0.01 * f64::signum(g)).abs() < 1e-8, "{moved}");
        }
    }

    #[test]
    fn adam_minimises_a_quadratic_bowl() {
        let hp = AdamConfig {
            learning_rate: 1e-2,
            ..AdamConfig::default()
        };
        let mut map = BTreeMap::new();
        map.insert(String::from("w"), Tensor::vector(vec![1.5, -2.0, 0.7]));
        let mut p = PolicyParams::from_raw(map);
        let mut state = AdamState::like(&p);
        for _ in 0..2000 {
            let mut g = p.clone();
            g.scale(2.0);
            adam_step(&mut p, &g, &mut state, &hp);
        }
        assert!(p.global_norm() < 1e-3, "{}", p.global_norm());
    }

    #[test]
    fn baseline_update_rule() {
        let c = tiny(5);
        let init = PolicyParams::init(&c, 1).unwrap();
        let val = validation_set(5, 8, 3).unwrap();
        let mean = mean_greedy_length(&c, &init, &val, &Sequential).unwrap();
        let mut b = BaselineParams::new(init.clone(), mean);
        assert!(!maybe_update_baseline(&c, &init, &mut b, &val, &Sequential).unwrap());
        assert_eq!(b.params(), &init);

        let mut worse = BaselineParams::new(init.clone(), mean + 1.0);
        let other = PolicyParams::init(&c, 2).unwrap();
        // Two random policies differ by far less than one unit of mean length here.
        assert!(maybe_update_baseline(&c, &other, &mut worse, &val, &Sequential).unwrap());
        assert_eq!(worse.params(), &other);
    }

    #[test]
    fn zero_advantage_contributes_nothing() {
        let c = tiny(5);
        let p = PolicyParams::init(&c, 4).unwrap();
        let inst = TspInstance::generate(5, 5).unwrap();
        let greedy = crate::decoding::decode_greedy(&inst, &c, &p).unwrap();
        // Find a sampling seed that reproduces the greedy tour.
        let seed = (0..2000u64)
            .find(|&s| crate::decoding::decode_sample(&inst, &c, &p, s).unwrap().tour == greedy.tour)
            .expect("a fresh 5-city policy samples its greedy tour eventually");
        let r = reinforce_instance(&inst, &c, &p, &p, seed).unwrap();
        assert_eq!(r.sampled_len, r.baseline_len);
        assert_eq!(r.surrogate, 0.0);
        assert!(r.grads.is_none());
    }

    #[test]
    fn epochs_zero_returns_initial_params() {
        let c = tiny(5);
        let init = PolicyParams::init(&c, 9).unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            val_size: 4,
            ..TrainConfig::desk_scale()
        };
        let val = validation_set(5, 4, 1).unwrap();
        let out = train(&c, &cfg, init.clone(), InstanceSource::Generated, &val, &Sequential, |_| {}).unwrap();
        assert_eq!(out.params, init);
        assert!(out.log.is_empty());
    }

    #[test]
    fn config_pairs() {
        let mut t = TrainConfig::desk_scale();
        t.apply_pair("learning_rate", "0.001").unwrap();
        t.apply_pair("grad_clip", "none").unwrap();
        t.apply_pair("baseline_rule", "frozen").unwrap();
        assert_eq!(t.adam.learning_rate, 0.001);
        assert_eq!(t.grad_clip, None);
        assert_eq!(t.baseline_rule, BaselineRule::Frozen);
        assert!(t.apply_pair("momentum", "0.9").is_err());
        t.batch_size = 0;
        assert!(t.validate().is_err());
    }
}

#[cfg(test)]
mod gradient_tests {
    use super::*;
    use crate::model::InputMode;

    fn tiny(n: usize) -> ModelConfig {
        ModelConfig {
            n_cities: n,
            d_model: 8,
            n_heads: 2,
            n_enc_layers: 1,
            n_dec_layers: 1,
            d_ff: 16,
            input_mode: InputMode::DistanceMatrix,
            use_pe: true,
        }
    }

    #[test]
    fn log_prob_gradient_matches_finite_differences() {
        let c = tiny(5);
        let p = PolicyParams::init(&c, 11).unwrap();
        let inst = TspInstance::generate(5, 12).unwrap();
        let tour = Tour::new(alloc::vec![3, 0, 4, 1, 2]).unwrap();
        let (lp, g) = tour_log_prob_grad(&inst, &c, &p, &tour).unwrap();
        assert!((lp - tour_log_prob(&inst, &c, &p, &tour).unwrap()).abs() < 1e-12);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for (name, t) in p.iter() {
            for i in (0..t.len()).step_by(1 + t.len() / 7) {
                let mut plus = p.clone();
                plus.get_mut(name).unwrap().data_mut()[i] += h;
                let mut minus = p.clone();
                minus.get_mut(name).unwrap().data_mut()[i] -= h;
                let num = (tour_log_prob(&inst, &c, &plus, &tour).unwrap()
                    - tour_log_prob(&inst, &c, &minus, &tour).unwrap())
                    / (2.0 * h);
                let ana = g.get(name).unwrap().data()[i];
                let rel = (ana - num).abs() / ana.abs().max(num.abs()).max(1e-6);
                worst = worst.max(rel);
                assert!(rel < 1e-4, "{name}[{i}]: analytic {ana}, numeric {num}");
            }
        }
        assert!(g.global_norm() > 0.0, "worst {worst}");
    }

    #[test]
    fn positive_advantage_lowers_the_sampled_log_prob() {
        let c = tiny(6);
        let p = PolicyParams::init(&c, 3).unwrap();
        let frozen = PolicyParams::init(&c, 4).unwrap();
        let inst = TspInstance::generate(6, 5).unwrap();
        let (r, _) = (0..200u64)
            .map(|s| (reinforce_instance(&inst, &c, &p, &frozen, s).unwrap(), s))
            .find(|(r, _)| r.sampled_len > r.baseline_len)
            .unwrap();
        let mut q = p.clone();
        q.add_scaled(r.grads.as_ref().unwrap(), -1e-3);
        let after = tour_log_prob(&inst, &c, &q, &r.tour).unwrap();
        assert!(after < r.log_prob, "{after} vs {}", r.log_prob);
    }
}
