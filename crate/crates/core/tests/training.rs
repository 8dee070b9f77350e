mod common;

use tsp_tta_core::exec::Sequential;
use tsp_tta_core::model::PolicyParams;
use tsp_tta_core::training::{
    reinforce_batch, reinforce_instance, tour_log_prob, tour_log_prob_grad, train, validation_set,
    BaselineParams, InstanceSource, TrainConfig,
};
use tsp_tta_core::tsp::{Tour, TspInstance};

/// Exact expected surrogate gradient `Σ_π p(π) (L(π) − c) ∇ log p(π)` over all 4! orderings.
fn expected_gradient(c_baseline: f64) -> PolicyParams {
    let c = common::tiny(4);
    let p = PolicyParams::init(&c, 5).unwrap();
    let inst = TspInstance::generate(4, 6).unwrap();
    let mut total = PolicyParams::zeros(&c);
    let mut mass = 0.0;
    for order in common::all_orders(4) {
        let tour = Tour::new(order).unwrap();
        let (lp, g) = tour_log_prob_grad(&inst, &c, &p, &tour).unwrap();
        let prob = lp.exp();
        mass += prob;
        total.add_scaled(&g, prob * (tour.length(&inst).unwrap() - c_baseline));
    }
    assert!((mass - 1.0).abs() < 1e-12);
    total
}

#[test]
fn constant_baselines_do_not_bias_the_gradient() {
    let reference = expected_gradient(0.0);
    for shift in [0.7, 2.5, -3.0] {
        let mut diff = expected_gradient(shift);
        diff.add_scaled(&reference, -1.0);
        let max = diff
            .iter()
            .flat_map(|(_, t)| t.data().iter().copied())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max < 1e-8, "baseline {shift}: {max:e}");
    }
}

#[test]
fn surrogate_gradient_matches_finite_differences() {
    let c = common::tiny(5);
    let p = PolicyParams::init(&c, 7).unwrap();
    let frozen = PolicyParams::init(&c, 8).unwrap();
    let inst = TspInstance::generate(5, 9).unwrap();
    let r = (0..100)
        .map(|s| reinforce_instance(&inst, &c, &p, &frozen, s).unwrap())
        .find(|r| r.grads.is_some())
        .unwrap();
    let advantage = r.sampled_len - r.baseline_len;
    let grads = r.grads.unwrap();
    let h = 1e-5;
    for (name, t) in p.iter() {
        for i in (0..t.len()).step_by(1 + t.len() / 5) {
            let mut plus = p.clone();
            plus.get_mut(name).unwrap().data_mut()[i] += h;
            let mut minus = p.clone();
            minus.get_mut(name).unwrap().data_mut()[i] -= h;
            let f = |q: &PolicyParams| advantage * tour_log_prob(&inst, &c, q, &r.tour).unwrap();
            let num = (f(&plus) - f(&minus)) / (2.0 * h);
            let ana = grads.get(name).unwrap().data()[i];
            let rel = (ana - num).abs() / ana.abs().max(num.abs()).max(1e-6);
            assert!(rel < 1e-4, "{name}[{i}]: {ana:e} vs {num:e}");
        }
    }
}

#[test]
fn batch_gradient_is_the_mean_of_instance_gradients() {
    let c = common::tiny(5);
    let p = PolicyParams::init(&c, 10).unwrap();
    let base = BaselineParams::new(PolicyParams::init(&c, 11).unwrap(), f64::INFINITY);
    let batch: Vec<_> = (0..4).map(|s| TspInstance::generate(5, 200 + s).unwrap()).collect();
    let seeds = [1, 2, 3, 4];
    let out = reinforce_batch(&c, &p, &base, &batch, &seeds, &Sequential).unwrap();
    let mut manual = PolicyParams::zeros(&c);
    let mut loss = 0.0;
    for (inst, &s) in batch.iter().zip(&seeds) {
        let r = reinforce_instance(inst, &c, &p, base.params(), s).unwrap();
        loss += r.surrogate / 4.0;
        if let Some(g) = &r.grads {
            manual.add_scaled(g, 0.25);
        }
    }
    assert!((out.loss - loss).abs() < 1e-12);
    assert_eq!(out.grads, manual);
}

#[test]
fn short_run_improves_and_baseline_never_gets_worse() {
    let c = common::tiny(5);
    let cfg = TrainConfig {
        epochs: 20,
        instances_per_epoch: 256,
        batch_size: 32,
        val_size: 64,
        seed: 3,
        adam: tsp_tta_core::training::AdamConfig {
            learning_rate: 1e-3,
            ..Default::default()
        },
        ..TrainConfig::desk_scale()
    };
    let val = validation_set(5, cfg.val_size, 4).unwrap();
    let init = PolicyParams::init(&c, 12).unwrap();
    let out = train(&c, &cfg, init, InstanceSource::Generated, &val, &Sequential, |_| {}).unwrap();
    assert_eq!(out.log.len(), 20);
    let final_val = out.baseline.val_mean();
    assert!(final_val < out.initial_val_len, "{final_val} vs {}", out.initial_val_len);
    let mut prev = out.initial_val_len;
    for row in &out.log {
        assert!(row.baseline_len <= prev);
        prev = row.baseline_len;
    }
}

#[test]
fn training_is_deterministic() {
    let c = common::tiny(5);
    let cfg = TrainConfig {
        epochs: 2,
        instances_per_epoch: 64,
        batch_size: 16,
        val_size: 16,
        ..TrainConfig::desk_scale()
    };
    let val = validation_set(5, 16, 1).unwrap();
    let run = || {
        let init = PolicyParams::init(&c, 1).unwrap();
        train(&c, &cfg, init, InstanceSource::Generated, &val, &Sequential, |_| {}).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.params, b.params);
    assert_eq!(a.log, b.log);
}
