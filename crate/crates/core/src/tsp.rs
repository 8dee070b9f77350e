//! Instances, distance matrices, tours, and the two relabelling/rigid-motion
//! actions used for augmentation.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::math;
use crate::rng::Rng;
use crate::{Error, Result};

/// Centre of the rotation augmentation.
pub const ROTATION_CENTER: [f64; 2] = [0.5, 0.5];

/// Euclidean TSP instance: city coordinates, nominally in the unit square.
#[derive(Debug, Clone, PartialEq)]
pub struct TspInstance {
    coords: Vec<[f64; 2]>,
}

impl TspInstance {
    pub fn new(coords: Vec<[f64; 2]>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidSize(coords.len()));
        }
        if coords.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("city coordinates must be finite".into()));
        }
        Ok(TspInstance { coords })
    }

    /// `n` i.i.d. uniform points in `[0, 1)²`.
    pub fn random(n: usize, rng: &mut Rng) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(n));
        }
        let coords = (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
        Ok(TspInstance { coords })
    }

    pub fn generate(n: usize, seed: u64) -> Result<Self> {
        Self::random(n, &mut crate::rng::seeded(seed))
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.coords[i], self.coords[j]);
        math::hypot(a[0] - b[0], a[1] - b[1])
    }

    pub fn distance_matrix(&self) -> DistanceMatrix {
        DistanceMatrix::from_instance(self)
    }

    /// Every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> TspInstance {
        TspInstance {
            coords: self.coords.iter().map(|p| [p[0] * factor, p[1] * factor]).collect(),
        }
    }

    /// Relabels cities: city `i` of `self` becomes city `perm.apply(i)`.
    pub fn permuted(&self, perm: &IndexPermutation) -> Result<TspInstance> {
        perm.check_len(self.n())?;
        let mut coords = vec![[0.0; 2]; self.n()];
        for (i, p) in self.coords.iter().enumerate() {
            coords[perm.apply(i)] = *p;
        }
        Ok(TspInstance { coords })
    }

    /// Rotates every city by `variant · 2π / count` around [`ROTATION_CENTER`].
    /// Points may leave the unit square; they are not clipped.
    pub fn rotated(&self, variant: usize, count: usize) -> Result<TspInstance> {
        if variant >= count.max(1) {
            return Err(Error::OutOfRange { index: variant, limit: count });
        }
        if variant == 0 {
            return Ok(self.clone());
        }
        let angle = variant as f64 * core::f64::consts::TAU / count as f64;
        let (s, c) = (math::sin(angle), math::cos(angle));
        let [cx, cy] = ROTATION_CENTER;
        let coords = self
            .coords
            .iter()
            .map(|p| {
                let (dx, dy) = (p[0] - cx, p[1] - cy);
                [cx + c * dx - s * dy, cy + s * dx + c * dy]
            })
            .collect();
        Ok(TspInstance { coords })
    }
}

/// Symmetric N×N matrix of Euclidean distances, row-major.
///
/// Because the matrix is symmetric, column `i` and row `i` hold the same
/// values; [`DistanceMatrix::column`] returns that shared slice.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_instance(inst: &TspInstance) -> Self {
        let n = inst.n();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = inst.distance(i, j);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        DistanceMatrix { n, d }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.d[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.d
    }

    /// Simultaneous row and column relabelling: `D'[σ(i)][σ(j)] = D[i][j]`.
    pub fn permuted(&self, perm: &IndexPermutation) -> Result<DistanceMatrix> {
        perm.check_len(self.n)?;
        let n = self.n;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[perm.apply(i) * n + perm.apply(j)] = self.get(i, j);
            }
        }
        Ok(DistanceMatrix { n, d })
    }

    /// Closed-circuit length of `tour` under these distances.
    pub fn tour_length(&self, tour: &Tour) -> f64 {
        let order = tour.order();
        let mut total = 0.0;
        for k in 0..order.len() {
            total += self.get(order[k], order[(k + 1) % order.len()]);
        }
        total
    }
}

/// Visit order of a closed circuit: a permutation of `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tour {
    order: Vec<usize>,
}

impl Tour {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        if !is_permutation(&order) {
            return Err(Error::InvalidPermutation(order.len()));
        }
        Ok(Tour { order })
    }

    pub(crate) fn new_unchecked(order: Vec<usize>) -> Self {
        debug_assert!(is_permutation(&order));
        Tour { order }
    }

    pub fn identity(n: usize) -> Self {
        Tour {
            order: (0..n).collect(),
        }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn into_order(self) -> Vec<usize> {
        self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Length including the closing edge back to the first city.
    pub fn length(&self, inst: &TspInstance) -> Result<f64> {
        if self.order.len() != inst.n() {
            return Err(Error::SizeMismatch {
                expected: inst.n(),
                got: self.order.len(),
            });
        }
        let n = self.order.len();
        let mut total = 0.0;
        for k in 0..n {
            total += inst.distance(self.order[k], self.order[(k + 1) % n]);
        }
        Ok(total)
    }

    /// Renames every city through `perm` (`order[k] ↦ perm(order[k])`).
    pub fn relabeled(&self, perm: &IndexPermutation) -> Result<Tour> {
        perm.check_len(self.order.len())?;
        Ok(Tour {
            order: self.order.iter().map(|&c| perm.apply(c)).collect(),
        })
    }
}

/// Bijection on `0..n` used to relabel cities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexPermutation {
    map: Vec<usize>,
}

impl IndexPermutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        if !is_permutation(&map) {
            return Err(Error::InvalidPermutation(map.len()));
        }
        Ok(IndexPermutation { map })
    }

    pub fn identity(n: usize) -> Self {
        IndexPermutation {
            map: (0..n).collect(),
        }
    }

    /// Uniformly random permutation (Fisher–Yates shuffle).
    pub fn random(n: usize, rng: &mut Rng) -> Self {
        let mut map: Vec<usize> = (0..n).collect();
        map.shuffle(rng);
        IndexPermutation { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &m)| i == m)
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> IndexPermutation {
        let mut inv = vec![0; self.map.len()];
        for (i, &m) in self.map.iter().enumerate() {
            inv[m] = i;
        }
        IndexPermutation { map: inv }
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if self.map.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                got: self.map.len(),
            });
        }
        Ok(())
    }
}

pub(crate) fn is_permutation(order: &[usize]) -> bool {
    let mut seen = vec![false; order.len()];
    for &c in order {
        if c >= order.len() || seen[c] {
            return false;
        }
        seen[c] = true;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeMap;

    fn square() -> TspInstance {
        TspInstance::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    #[test]
    fn generation_is_seeded_and_in_range() {
        let a = TspInstance::generate(2, 5).unwrap();
        assert_eq!(a.n(), 2);
        assert!(a.coords().iter().flatten().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(TspInstance::generate(7, 9).unwrap(), TspInstance::generate(7, 9).unwrap());
        assert_ne!(TspInstance::generate(7, 9).unwrap(), TspInstance::generate(7, 10).unwrap());
        assert_eq!(TspInstance::generate(1, 0), Err(Error::InvalidSize(1)));
    }

    #[test]
    fn generated_coordinates_average_one_half() {
        let (mut sx, mut sy, mut count) = (0.0, 0.0, 0.0);
        for seed in 0..10_000 {
            for p in TspInstance::generate(50, seed).unwrap().coords() {
                sx += p[0];
                sy += p[1];
                count += 1.0;
            }
        }
        let (mx, my) = (sx / count, sy / count);
        assert!((0.49..=0.51).contains(&mx) && (0.49..=0.51).contains(&my), "{mx} {my}");
    }

    #[test]
    fn distance_matrix_examples() {
        let inst = TspInstance::new(vec![[0.0, 0.0], [3.0, 4.0]]).unwrap();
        assert_eq!(inst.distance_matrix().get(0, 1), 5.0);

        let d = square().distance_matrix();
        let sqrt2 = 2f64.sqrt();
        for i in 0..4 {
            assert_eq!(d.get(i, i), 0.0);
            let mut row: Vec<f64> = (0..4).filter(|&j| j != i).map(|j| d.get(i, j)).collect();
            row.sort_by(f64::total_cmp);
            assert_eq!(row[0], 1.0);
            assert_eq!(row[1], 1.0);
            assert!((row[2] - sqrt2).abs() < 1e-15);
        }
    }

    #[test]
    fn tour_lengths_on_the_square() {
        let sq = square();
        assert_eq!(Tour::new(vec![0, 1, 2, 3]).unwrap().length(&sq).unwrap(), 4.0);
        let crossed = Tour::new(vec![0, 2, 1, 3]).unwrap().length(&sq).unwrap();
        assert!((crossed - (2.0 + 2.0 * 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn invalid_tours_and_permutations_are_rejected() {
        assert!(Tour::new(vec![0, 0, 1]).is_err());
        assert!(Tour::new(vec![0, 3, 1]).is_err());
        assert!(IndexPermutation::new(vec![1, 1]).is_err());
        let t = Tour::new(vec![0, 1, 2]).unwrap();
        assert!(matches!(t.length(&square()), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn permutation_examples() {
        let inst = TspInstance::generate(6, 3).unwrap();
        assert_eq!(inst.permuted(&IndexPermutation::identity(6)).unwrap(), inst);
        let sigma = IndexPermutation::random(6, &mut crate::rng::seeded(4));
        let back = inst.permuted(&sigma).unwrap().permuted(&sigma.inverse()).unwrap();
        assert_eq!(back, inst);
        assert!(inst.permuted(&IndexPermutation::identity(5)).is_err());
    }

    #[test]
    fn swapping_two_cities_swaps_rows_and_columns() {
        let inst = TspInstance::generate(3, 11).unwrap();
        let d = inst.distance_matrix();
        let swap = IndexPermutation::new(vec![1, 0, 2]).unwrap();
        let p = d.permuted(&swap).unwrap();
        assert_eq!(p.get(0, 2), d.get(1, 2));
        assert_eq!(p.get(2, 1), d.get(2, 0));
        assert_eq!(p.get(0, 1), d.get(1, 0));
        assert_eq!(d.permuted(&IndexPermutation::identity(3)).unwrap(), d);
    }

    #[test]
    fn rotation_examples() {
        let inst = TspInstance::new(vec![[1.0, 0.5], [0.2, 0.9]]).unwrap();
        assert_eq!(inst.rotated(0, 4).unwrap(), inst);
        let r = inst.rotated(1, 4).unwrap();
        assert!((r.coords()[0][0] - 0.5).abs() < 1e-12);
        assert!((r.coords()[0][1] - 1.0).abs() < 1e-12);
        assert!(inst.rotated(4, 4).is_err());
    }

    #[test]
    fn fisher_yates_is_uniform_on_four_elements() {
        let mut rng = crate::rng::seeded(2024);
        let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for _ in 0..60_000 {
            let p = IndexPermutation::random(4, &mut rng);
            *counts.entry(p.as_slice().to_vec()).or_default() += 1;
        }
        assert_eq!(counts.len(), 24);
        for (perm, c) in counts {
            assert!((2375..=2625).contains(&c), "{perm:?} drawn {c} times");
        }
    }
}
