use proptest::prelude::*;
use tsp_tta_core::oracle::{solve_brute_force, solve_held_karp};
use tsp_tta_core::rng::seeded;
use tsp_tta_core::tsp::{IndexPermutation, Tour, TspInstance};

fn instance(max_n: usize) -> impl Strategy<Value = TspInstance> {
    prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 3..=max_n)
        .prop_map(|pts| TspInstance::new(pts.into_iter().map(|(x, y)| [x, y]).collect()).unwrap())
}

fn instance_and_tour(max_n: usize) -> impl Strategy<Value = (TspInstance, Vec<usize>)> {
    instance(max_n).prop_flat_map(|inst| {
        let n = inst.n();
        (Just(inst), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rotating_or_reversing_a_tour_keeps_its_length((inst, order) in instance_and_tour(12), shift in 0usize..12) {
        let base = Tour::new(order.clone()).unwrap().length(&inst).unwrap();
        let mut rotated = order.clone();
        rotated.rotate_left(shift % order.len());
        let mut reversed = order.clone();
        reversed.reverse();
        prop_assert!((Tour::new(rotated).unwrap().length(&inst).unwrap() - base).abs() < 1e-12);
        prop_assert!((Tour::new(reversed).unwrap().length(&inst).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn relabelling_commutes_with_tour_length((inst, order) in instance_and_tour(12), seed in any::<u64>()) {
        let sigma = IndexPermutation::random(inst.n(), &mut seeded(seed));
        let tour = Tour::new(order).unwrap();
        let moved = inst.permuted(&sigma).unwrap();
        let a = tour.length(&inst).unwrap();
        let b = tour.relabeled(&sigma).unwrap().length(&moved).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        let dm = inst.distance_matrix().permuted(&sigma).unwrap();
        prop_assert_eq!(dm, moved.distance_matrix());
    }

    #[test]
    fn rotation_is_an_isometry(inst in instance(12), k in 0usize..16) {
        let rot = inst.rotated(k, 16).unwrap();
        let (a, b) = (inst.distance_matrix(), rot.distance_matrix());
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn optimum_ignores_labels_and_rotation(inst in instance(8), seed in any::<u64>(), k in 0usize..8) {
        let opt = solve_held_karp(&inst).unwrap().length;
        let sigma = IndexPermutation::random(inst.n(), &mut seeded(seed));
        prop_assert!((solve_held_karp(&inst.permuted(&sigma).unwrap()).unwrap().length - opt).abs() < 1e-9);
        prop_assert!((solve_held_karp(&inst.rotated(k, 8).unwrap()).unwrap().length - opt).abs() < 1e-9);
        prop_assert!((solve_brute_force(&inst).unwrap().length - opt).abs() < 1e-9);
    }

    #[test]
    fn inverse_undoes_a_permutation(n in 1usize..30, seed in any::<u64>()) {
        let p = IndexPermutation::random(n, &mut seeded(seed));
        let inv = p.inverse();
        for i in 0..n {
            prop_assert_eq!(inv.apply(p.apply(i)), i);
        }
    }
}
