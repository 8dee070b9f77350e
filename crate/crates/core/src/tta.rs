//! Test-time augmentation: decode several relabelled or rotated copies of an
//! instance and keep the shortest tour.
//!
//! Variant 0 is always the untouched instance. Variant `k ≥ 1` of a
//! permutation policy depends only on `(seed, k)`, never on `M`, so the first
//! `M` variants of a larger run are exactly the variants of an `M`-run. Rotation
//! angles are `k · 2π / M` and therefore do depend on `M`.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::decoding::{decode_beam, decode_greedy, BeamConfig, DecodedTour};
use crate::exec::Executor;
use crate::math;
use crate::model::{ModelConfig, PolicyParams};
use crate::rng::{derive_seed, seeded};
use crate::tsp::{IndexPermutation, TspInstance};
use crate::{Error, Result};

const VARIANT_STREAM: u64 = 0x7A7A_0001;
const INSTANCE_STREAM: u64 = 0x7A7A_0002;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentPolicy {
    Permutation,
    Rotation,
    RotationPermutation,
}

impl AugmentPolicy {
    /// Whether variant sets grow by appending (so prefix minima are exact).
    pub fn is_nested(self) -> bool {
        self == AugmentPolicy::Permutation
    }
}

impl fmt::Display for AugmentPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AugmentPolicy::Permutation => "permutation",
            AugmentPolicy::Rotation => "rotation",
            AugmentPolicy::RotationPermutation => "rotation+permutation",
        })
    }
}

impl FromStr for AugmentPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "permutation" => Ok(AugmentPolicy::Permutation),
            "rotation" => Ok(AugmentPolicy::Rotation),
            "rotation+permutation" => Ok(AugmentPolicy::RotationPermutation),
            other => Err(Error::Config(alloc::format!("unknown augmentation policy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TtaConfig {
    augment_size: usize,
    pub policy: AugmentPolicy,
    pub seed: u64,
    /// Decode each variant with beam search instead of greedily.
    pub beam: Option<BeamConfig>,
}

impl TtaConfig {
    pub fn new(augment_size: usize, policy: AugmentPolicy, seed: u64) -> Result<Self> {
        if augment_size == 0 {
            return Err(Error::Config("augment size must be at least 1".into()));
        }
        Ok(TtaConfig {
            augment_size,
            policy,
            seed,
            beam: None,
        })
    }

    pub fn augment_size(&self) -> usize {
        self.augment_size
    }

    pub fn with_augment_size(self, augment_size: usize) -> Result<Self> {
        TtaConfig::new(augment_size, self.policy, self.seed).map(|c| TtaConfig { beam: self.beam, ..c })
    }

    /// The configuration used for instance `index` of a batch: same size and
    /// policy, seed derived from `(self.seed, index)`.
    pub fn for_instance(&self, index: usize) -> Self {
        TtaConfig {
            seed: derive_seed(self.seed, INSTANCE_STREAM, index as u64),
            ..*self
        }
    }
}

/// One augmented copy together with the relabelling needed to undo it.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub instance: TspInstance,
    /// `Some(σ)` when city `i` of the original is city `σ(i)` of the variant.
    pub relabel: Option<IndexPermutation>,
}

impl Variant {
    /// Maps a tour of the variant back to the original city labels.
    pub fn restore(&self, decoded: &DecodedTour, original: &TspInstance) -> Result<DecodedTour> {
        let tour = match &self.relabel {
            Some(sigma) => decoded.tour.relabeled(&sigma.inverse())?,
            None => decoded.tour.clone(),
        };
        let length = tour.length(original)?;
        Ok(DecodedTour {
            tour,
            log_prob: decoded.log_prob,
            length,
        })
    }
}

/// Variant `k` of a TTA run with `m` variants.
pub fn make_variant(inst: &TspInstance, tta: &TtaConfig, k: usize) -> Result<Variant> {
    let m = tta.augment_size;
    if k >= m {
        return Err(Error::OutOfRange { index: k, limit: m });
    }
    if k == 0 {
        return Ok(Variant {
            instance: inst.clone(),
            relabel: None,
        });
    }
    let n = inst.n();
    let sigma = || IndexPermutation::random(n, &mut seeded(derive_seed(tta.seed, VARIANT_STREAM, k as u64)));
    match tta.policy {
        AugmentPolicy::Permutation => {
            let s = sigma();
            Ok(Variant {
                instance: inst.permuted(&s)?,
                relabel: Some(s),
            })
        }
        AugmentPolicy::Rotation => Ok(Variant {
            instance: inst.rotated(k, m)?,
            relabel: None,
        }),
        AugmentPolicy::RotationPermutation => {
            let s = sigma();
            Ok(Variant {
                instance: inst.rotated(k, m)?.permuted(&s)?,
                relabel: Some(s),
            })
        }
    }
}

fn decode_variant(
    inst: &TspInstance,
    config: &ModelConfig,
    params: &PolicyParams,
    tta: &TtaConfig,
    k: usize,
) -> Result<DecodedTour> {
    let variant = make_variant(inst, tta, k)?;
    let decoded = match tta.beam {
        Some(beam) => decode_beam(&variant.instance, config, params, beam)?,
        None => decode_greedy(&variant.instance, config, params)?,
    };
    variant.restore(&decoded, inst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TtaOutcome {
    /// Shortest tour, in the original city labels.
    pub best: DecodedTour,
    /// Length of every variant's tour on the original instance.
    pub all_lengths: Vec<f64>,
    /// First variant achieving the minimum.
    pub variant_of_best: usize,
}

fn pick_best(tours: Vec<DecodedTour>) -> Result<TtaOutcome> {
    let all_lengths: Vec<f64> = tours.iter().map(|t| t.length).collect();
    let mut best_k = 0;
    for (k, &l) in all_lengths.iter().enumerate() {
        if l < all_lengths[best_k] {
            best_k = k;
        }
    }
    let best = tours.into_iter().nth(best_k).ok_or(Error::Empty("tta variants"))?;
    Ok(TtaOutcome {
        best,
        all_lengths,
        variant_of_best: best_k,
    })
}

/// Decodes all `M` variants (in parallel through `exec`) and keeps the shortest.
pub fn tta_solve<E: Executor>(
    inst: &TspInstance,
    config: &ModelConfig,
    params: &PolicyParams,
    tta: &TtaConfig,
    exec: &E,
) -> Result<TtaOutcome> {
    if inst.n() != config.n_cities {
        return Err(Error::SizeMismatch {
            expected: config.n_cities,
            got: inst.n(),
        });
    }
    let ks: Vec<usize> = (0..tta.augment_size).collect();
    let tours = exec
        .map(ks, |k| decode_variant(inst, config, params, tta, k))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    pick_best(tours)
}

/// One row of a gap-versus-M sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub m: usize,
    pub mean_gap: f64,
    /// Population standard deviation of the per-instance gaps.
    pub std_gap: f64,
    pub mean_len: f64,
    /// Cumulative time spent decoding up to this `M`, if a clock was supplied.
    pub wall_time_ms: Option<u64>,
}

/// Per-instance best lengths of a sweep, one vector per `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// `best_lengths[r][i]`: best length on instance `i` at `rows[r].m`.
    pub best_lengths: Vec<Vec<f64>>,
}

/// Mean and population standard deviation of the gaps `pred / opt − 1`.
fn gap_stats(preds: &[f64], opts: &[f64]) -> Result<(f64, f64)> {
    let gaps = crate::metrics::per_instance_gaps(preds, opts)?;
    let k = gaps.len() as f64;
    let mean = gaps.iter().sum::<f64>() / k;
    let var = gaps.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / k;
    Ok((mean, math::sqrt(var)))
}

/// Optimality gap as a function of `M` over a set of instances.
///
/// Instance `i` uses `tta.for_instance(i)`. For the permutation policy the
/// variants of every `M` are a prefix of the next, so each instance's best
/// length can only shrink as `M` grows; the variants are decoded once,
/// in increments. Rotation policies decode every `M` from scratch.
///
/// `clock` returns milliseconds from any fixed origin.
#[allow(clippy::too_many_arguments)]
pub fn gap_vs_m_sweep<E: Executor>(
    instances: &[TspInstance],
    opt_lens: &[f64],
    config: &ModelConfig,
    params: &PolicyParams,
    tta: &TtaConfig,
    m_values: &[usize],
    exec: &E,
    clock: Option<&dyn Fn() -> u64>,
) -> Result<SweepOutcome> {
    if instances.is_empty() {
        return Err(Error::Empty("sweep instances"));
    }
    if instances.len() != opt_lens.len() {
        return Err(Error::SizeMismatch {
            expected: instances.len(),
            got: opt_lens.len(),
        });
    }
    if m_values.is_empty() || m_values[0] == 0 || m_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("sweep M values must be positive and strictly ascending".into()));
    }
    if let Some(bad) = instances.iter().find(|i| i.n() != config.n_cities) {
        return Err(Error::SizeMismatch {
            expected: config.n_cities,
            got: bad.n(),
        });
    }

    let start = clock.map(|c| c());
    let mut best = alloc::vec![f64::INFINITY; instances.len()];
    let mut done = 0usize;
    let mut rows = Vec::with_capacity(m_values.len());
    let mut best_lengths = Vec::with_capacity(m_values.len());
    let jobs = || instances.iter().enumerate().collect::<Vec<_>>();
    let largest = *m_values.last().expect("checked non-empty");

    for &m in m_values {
        if tta.policy.is_nested() {
            // Only the variants this M adds on top of the previous one.
            let run = tta.with_augment_size(largest)?;
            let lo = done;
            let chunk = exec.map(jobs(), |(i, inst)| -> Result<f64> {
                let cfg = run.for_instance(i);
                let mut b = f64::INFINITY;
                for k in lo..m {
                    b = b.min(decode_variant(inst, config, params, &cfg, k)?.length);
                }
                Ok(b)
            });
            for (slot, l) in best.iter_mut().zip(chunk) {
                *slot = slot.min(l?);
            }
        } else {
            let run = tta.with_augment_size(m)?;
            let fresh = exec.map(jobs(), |(i, inst)| {
                let cfg = run.for_instance(i);
                let ks = 0..m;
                ks.map(|k| decode_variant(inst, config, params, &cfg, k).map(|d| d.length))
                    .try_fold(f64::INFINITY, |acc, l| l.map(|l| acc.min(l)))
            });
            for (slot, l) in best.iter_mut().zip(fresh) {
                *slot = l?;
            }
        }
        done = m;
        let (mean_gap, std_gap) = gap_stats(&best, opt_lens)?;
        rows.push(SweepRow {
            m,
            mean_gap,
            std_gap,
            mean_len: crate::metrics::average_tour_length(&best)?,
            wall_time_ms: clock.zip(start).map(|(c, s)| c().saturating_sub(s)),
        });
        best_lengths.push(best.clone());
    }
    Ok(SweepOutcome { rows, best_lengths })
}
