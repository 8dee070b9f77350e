//! Reference solvers: exhaustive search and Held–Karp for exact optima on small
//! instances, nearest-neighbour construction and 2-opt for larger ones.
//!
//! Ties are always broken towards the lowest city index so results are
//! reproducible.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::tsp::{DistanceMatrix, TspInstance, Tour};
use crate::{Error, Result};

pub const BRUTE_FORCE_MAX_N: usize = 10;
pub const HELD_KARP_MAX_N: usize = 16;
pub const TWO_OPT_MAX_PASSES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    BruteForce,
    HeldKarp,
    NearestNeighbor,
    TwoOpt,
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveMethod::BruteForce => "brute",
            SolveMethod::HeldKarp => "held-karp",
            SolveMethod::NearestNeighbor => "nn",
            SolveMethod::TwoOpt => "2opt",
        })
    }
}

impl core::str::FromStr for SolveMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute" => Ok(SolveMethod::BruteForce),
            "held-karp" => Ok(SolveMethod::HeldKarp),
            "nn" => Ok(SolveMethod::NearestNeighbor),
            "2opt" => Ok(SolveMethod::TwoOpt),
            other => Err(Error::Config(alloc::format!("unknown solver method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub tour: Tour,
    pub length: f64,
    pub method: SolveMethod,
}

impl SolveResult {
    fn new(inst: &TspInstance, tour: Tour, method: SolveMethod) -> Self {
        let length = tour.length(inst).expect("solver tours match the instance");
        SolveResult { tour, length, method }
    }
}

/// Dispatches to the named method; `start` only matters for nearest neighbour
/// and for the 2-opt starting tour (which is nearest neighbour from `start`).
pub fn solve(inst: &TspInstance, method: SolveMethod, start: usize) -> Result<SolveResult> {
    match method {
        SolveMethod::BruteForce => solve_brute_force(inst),
        SolveMethod::HeldKarp => solve_held_karp(inst),
        SolveMethod::NearestNeighbor => solve_nearest_neighbor(inst, start),
        SolveMethod::TwoOpt => {
            let nn = solve_nearest_neighbor(inst, start)?;
            improve_2opt(inst, &nn.tour)
        }
    }
}

/// Enumerates every distinct circuit through city 0, skipping mirror images.
pub fn solve_brute_force(inst: &TspInstance) -> Result<SolveResult> {
    let n = inst.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::SizeLimit {
            solver: "brute force",
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    let d = inst.distance_matrix();
    let mut search = Exhaustive {
        d: &d,
        path: vec![0],
        used: vec![false; n],
        best_len: f64::INFINITY,
        best: Vec::new(),
    };
    search.used[0] = true;
    search.extend(0.0);
    let tour = Tour::new_unchecked(search.best);
    Ok(SolveResult::new(inst, tour, SolveMethod::BruteForce))
}

struct Exhaustive<'a> {
    d: &'a DistanceMatrix,
    path: Vec<usize>,
    used: Vec<bool>,
    best_len: f64,
    best: Vec<usize>,
}

impl Exhaustive<'_> {
    fn extend(&mut self, partial: f64) {
        let n = self.d.n();
        if self.path.len() == n {
            // Each circuit appears twice (once per direction); keep the one whose
            // second city is smaller than its last.
            if n > 2 && self.path[1] > self.path[n - 1] {
                return;
            }
            let total = partial + self.d.get(self.path[n - 1], 0);
            if total < self.best_len {
                self.best_len = total;
                self.best = self.path.clone();
            }
            return;
        }
        let last = *self.path.last().expect("path starts at city 0");
        for c in 1..n {
            if self.used[c] {
                continue;
            }
            self.used[c] = true;
            self.path.push(c);
            self.extend(partial + self.d.get(last, c));
            self.path.pop();
            self.used[c] = false;
        }
    }
}

/// Bellman–Held–Karp dynamic program over subsets of cities `1..n`.
///
/// `cost[S][j]` is the shortest path that leaves city 0, visits exactly the set
/// `S` and ends at `j ∈ S`; `S` is a bitmask over cities `1..n` (bit `j - 1`).
pub fn solve_held_karp(inst: &TspInstance) -> Result<SolveResult> {
    let n = inst.n();
    if n > HELD_KARP_MAX_N {
        return Err(Error::SizeLimit {
            solver: "Held-Karp",
            n,
            max: HELD_KARP_MAX_N,
        });
    }
    let d = inst.distance_matrix();
    let m = n - 1;
    let subsets = 1usize << m;
    let mut cost = vec![f64::INFINITY; subsets * m];
    let mut parent = vec![u8::MAX; subsets * m];
    for j in 0..m {
        cost[(1 << j) * m + j] = d.get(0, j + 1);
        parent[(1 << j) * m + j] = 0;
    }
    for set in 1..subsets {
        if set.count_ones() < 2 {
            continue;
        }
        for j in 0..m {
            if set & (1 << j) == 0 {
                continue;
            }
            let prev_set = set & !(1 << j);
            let mut best = f64::INFINITY;
            let mut best_i = u8::MAX;
            for i in 0..m {
                if prev_set & (1 << i) == 0 {
                    continue;
                }
                let c = cost[prev_set * m + i] + d.get(i + 1, j + 1);
                if c < best {
                    best = c;
                    best_i = (i + 1) as u8;
                }
            }
            cost[set * m + j] = best;
            parent[set * m + j] = best_i;
        }
    }
    let full = subsets - 1;
    let mut last = 0;
    let mut best = f64::INFINITY;
    for j in 0..m {
        let c = cost[full * m + j] + d.get(j + 1, 0);
        if c < best {
            best = c;
            last = j;
        }
    }
    let mut order = vec![0; n];
    let mut set = full;
    let mut city = last;
    for slot in (1..n).rev() {
        order[slot] = city + 1;
        let p = parent[set * m + city] as usize;
        set &= !(1 << city);
        if p == 0 {
            break;
        }
        city = p - 1;
    }
    let tour = Tour::new_unchecked(order);
    Ok(SolveResult::new(inst, tour, SolveMethod::HeldKarp))
}

/// Repeatedly moves to the nearest unvisited city.
pub fn solve_nearest_neighbor(inst: &TspInstance, start: usize) -> Result<SolveResult> {
    let n = inst.n();
    if start >= n {
        return Err(Error::OutOfRange { index: start, limit: n });
    }
    let d = inst.distance_matrix();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut cur = start;
    visited[cur] = true;
    order.push(cur);
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut best = f64::INFINITY;
        for (c, &seen) in visited.iter().enumerate() {
            if !seen && d.get(cur, c) < best {
                best = d.get(cur, c);
                next = c;
            }
        }
        visited[next] = true;
        order.push(next);
        cur = next;
    }
    let tour = Tour::new_unchecked(order);
    Ok(SolveResult::new(inst, tour, SolveMethod::NearestNeighbor))
}

/// First-improvement 2-opt: reverse the first segment whose two-edge exchange
/// shortens the tour, restart the scan, stop when no exchange improves.
pub fn improve_2opt(inst: &TspInstance, tour: &Tour) -> Result<SolveResult> {
    let n = inst.n();
    if tour.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: tour.len(),
        });
    }
    let d = inst.distance_matrix();
    let mut order = tour.order().to_vec();
    let mut passes = 0;
    'scan: loop {
        passes += 1;
        if passes > TWO_OPT_MAX_PASSES {
            return Err(Error::PassLimit(TWO_OPT_MAX_PASSES));
        }
        for i in 0..n.saturating_sub(2) {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (order[i], order[i + 1]);
                let (c, e) = (order[j], order[(j + 1) % n]);
                let delta = d.get(a, c) + d.get(b, e) - d.get(a, b) - d.get(c, e);
                if delta < -1e-12 {
                    order[i + 1..=j].reverse();
                    continue 'scan;
                }
            }
        }
        break;
    }
    let tour = Tour::new_unchecked(order);
    Ok(SolveResult::new(inst, tour, SolveMethod::TwoOpt))
}
