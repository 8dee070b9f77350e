//! Turning the step-wise policy into complete tours.

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::math;
use crate::model::argmax;
use crate::model::{DecoderState, ModelConfig, PolicyParams, PolicyPass};
use crate::rng::{seeded, Rng};
use crate::tsp::{TspInstance, Tour};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeamConfig {
    width: usize,
}

impl BeamConfig {
    pub fn new(width: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::Config("beam width must be at least 1".into()));
        }
        Ok(BeamConfig { width })
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

/// A complete tour with its log-probability under the policy and its length.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedTour {
    pub tour: Tour,
    pub log_prob: f64,
    pub length: f64,
}

impl DecodedTour {
    fn finish(inst: &TspInstance, state: &DecoderState) -> Result<Self> {
        let tour = Tour::new(state.partial().to_vec())?;
        let length = tour.length(inst)?;
        Ok(DecodedTour {
            tour,
            log_prob: state.log_prob(),
            length,
        })
    }
}

/// Argmax rollout on an existing pass.
pub fn greedy_rollout(pass: &mut PolicyPass<'_>, track: bool) -> Result<DecoderState> {
    let mut state = pass.start()?;
    while let Some(probs) = pass.probs(&state) {
        let city = argmax(probs);
        state = pass.choose(&state, city, track)?;
    }
    Ok(state)
}

/// Rollout that samples each step from the masked distribution.
pub fn sample_rollout(pass: &mut PolicyPass<'_>, rng: &mut Rng, track: bool) -> Result<DecoderState> {
    let mut state = pass.start()?;
    while let Some(probs) = pass.probs(&state) {
        let city = match WeightedIndex::new(probs) {
            Ok(dist) => dist.sample(rng),
            // Every unvisited probability underflowed; fall back to the argmax.
            Err(_) => argmax(probs),
        };
        state = pass.choose(&state, city, track)?;
    }
    Ok(state)
}

pub fn decode_greedy(inst: &TspInstance, config: &ModelConfig, params: &PolicyParams) -> Result<DecodedTour> {
    let mut pass = PolicyPass::new(inst, config, params)?;
    let state = greedy_rollout(&mut pass, false)?;
    DecodedTour::finish(inst, &state)
}

pub fn decode_sample(
    inst: &TspInstance,
    config: &ModelConfig,
    params: &PolicyParams,
    seed: u64,
) -> Result<DecodedTour> {
    let mut pass = PolicyPass::new(inst, config, params)?;
    let state = sample_rollout(&mut pass, &mut seeded(seed), false)?;
    DecodedTour::finish(inst, &state)
}

struct Candidate {
    score: f64,
    parent: usize,
    city: usize,
}

/// Beam search keeping the `width` partial tours with the highest summed
/// log-probability; among the completed tours the shortest one is returned.
///
/// Ranking ties go to the higher score, then to the lexicographically smaller
/// partial tour.
pub fn decode_beam(
    inst: &TspInstance,
    config: &ModelConfig,
    params: &PolicyParams,
    beam: BeamConfig,
) -> Result<DecodedTour> {
    let mut pass = PolicyPass::new(inst, config, params)?;
    let mut beams = alloc::vec![pass.start()?];
    while !beams[0].is_complete() {
        let mut candidates = Vec::new();
        for (parent, state) in beams.iter().enumerate() {
            let probs = pass.probs(state).expect("incomplete beams have a distribution");
            for (city, &p) in probs.iter().enumerate() {
                if state.visited()[city] {
                    continue;
                }
                candidates.push(Candidate {
                    score: state.log_prob() + math::ln(p),
                    parent,
                    city,
                });
            }
        }
        candidates.sort_by(|a, b| {
            b.score.total_cmp(&a.score).then_with(|| {
                let pa = beams[a.parent].partial();
                let pb = beams[b.parent].partial();
                pa.cmp(pb).then(a.city.cmp(&b.city))
            })
        });
        candidates.truncate(beam.width);
        beams = candidates
            .iter()
            .map(|c| pass.choose(&beams[c.parent], c.city, false))
            .collect::<Result<_>>()?;
    }
    let mut best: Option<DecodedTour> = None;
    for state in &beams {
        let cand = DecodedTour::finish(inst, state)?;
        let better = match &best {
            None => true,
            Some(b) => match cand.length.total_cmp(&b.length) {
                Ordering::Less => true,
                Ordering::Equal => cand.log_prob > b.log_prob,
                Ordering::Greater => false,
            },
        };
        if better {
            best = Some(cand);
        }
    }
    best.ok_or(Error::Empty("beam search"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{decode_step, InputMode};

    fn small(n: usize) -> ModelConfig {
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
    fn two_cities() {
        let c = small(2);
        let p = PolicyParams::init(&c, 4).unwrap();
        let inst = TspInstance::generate(2, 3).unwrap();
        let g = decode_greedy(&inst, &c, &p).unwrap();
        assert_eq!(g.length, 2.0 * inst.distance(0, 1));
        let s = decode_sample(&inst, &c, &p, 99).unwrap();
        let first = decode_step(&inst, &c, &p, &[]).unwrap();
        assert_eq!(g.tour.order()[0], first.argmax());
        assert_eq!(s.length, g.length);
    }

    #[test]
    fn greedy_is_deterministic_and_scores_itself() {
        let c = small(7);
        let p = PolicyParams::init(&c, 5).unwrap();
        let inst = TspInstance::generate(7, 6).unwrap();
        let a = decode_greedy(&inst, &c, &p).unwrap();
        assert_eq!(a, decode_greedy(&inst, &c, &p).unwrap());
        let order = a.tour.order();
        let mut recomputed = 0.0;
        for k in 0..order.len() {
            let d = decode_step(&inst, &c, &p, &order[..k]).unwrap();
            assert_eq!(order[k], d.argmax());
            recomputed += d.probs[order[k]].ln();
        }
        assert!((recomputed - a.log_prob).abs() < 1e-10);
        assert!(a.log_prob <= 0.0);
    }

    #[test]
    fn samples_are_valid_and_seeded() {
        let c = small(6);
        let p = PolicyParams::init(&c, 5).unwrap();
        let inst = TspInstance::generate(6, 6).unwrap();
        for seed in 0..20 {
            let s = decode_sample(&inst, &c, &p, seed).unwrap();
            assert_eq!(s, decode_sample(&inst, &c, &p, seed).unwrap());
            assert!((s.length - s.tour.length(&inst).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn first_step_sampling_frequencies_match_the_policy() {
        let c = small(5);
        let p = PolicyParams::init(&c, 8).unwrap();
        let inst = TspInstance::generate(5, 9).unwrap();
        let probs = decode_step(&inst, &c, &p, &[]).unwrap().probs;
        let mut counts = [0usize; 5];
        for seed in 0..10_000 {
            let s = decode_sample(&inst, &c, &p, seed).unwrap();
            counts[s.tour.order()[0]] += 1;
        }
        for (k, &cnt) in counts.iter().enumerate() {
            let freq = cnt as f64 / 10_000.0;
            assert!((freq - probs[k]).abs() < 0.02, "city {k}: {freq} vs {}", probs[k]);
        }
    }

    #[test]
    fn width_one_beam_is_greedy() {
        let c = small(7);
        let p = PolicyParams::init(&c, 15).unwrap();
        for seed in 0..10 {
            let inst = TspInstance::generate(7, seed).unwrap();
            let g = decode_greedy(&inst, &c, &p).unwrap();
            let b = decode_beam(&inst, &c, &p, BeamConfig::new(1).unwrap()).unwrap();
            assert_eq!(g, b);
        }
        assert!(BeamConfig::new(0).is_err());
    }
}
