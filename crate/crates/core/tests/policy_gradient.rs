//! Finite-difference check of the full policy: every scalar of every parameter.

mod common;

use std::time::Instant;

use tsp_tta_core::model::PolicyParams;
use tsp_tta_core::training::{tour_log_prob, tour_log_prob_grad};
use tsp_tta_core::tsp::{Tour, TspInstance};

#[test]
fn tour_log_prob_gradient_over_every_parameter() {
    let started = Instant::now();
    let c = common::tiny(5);
    let p = PolicyParams::init(&c, 21).unwrap();
    let inst = TspInstance::generate(5, 22).unwrap();
    let tour = Tour::new(vec![2, 4, 0, 3, 1]).unwrap();
    let (_, grads) = tour_log_prob_grad(&inst, &c, &p, &tour).unwrap();
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (name, t) in p.iter() {
        for i in 0..t.len() {
            let mut plus = p.clone();
            plus.get_mut(name).unwrap().data_mut()[i] += h;
            let mut minus = p.clone();
            minus.get_mut(name).unwrap().data_mut()[i] -= h;
            let num = (tour_log_prob(&inst, &c, &plus, &tour).unwrap()
                - tour_log_prob(&inst, &c, &minus, &tour).unwrap())
                / (2.0 * h);
            let ana = grads.get(name).unwrap().data()[i];
            let rel = (ana - num).abs() / ana.abs().max(num.abs()).max(1e-6);
            assert!(rel < 1e-4, "{name}[{i}]: analytic {ana:e}, numeric {num:e}");
            worst = worst.max(rel);
            checked += 1;
        }
    }
    assert_eq!(checked, p.scalar_count());
    assert!(started.elapsed().as_secs() < 60);
    eprintln!("{checked} scalars, worst relative error {worst:e}");
}
