//! Test-time augmentation for the Euclidean TSP, built on a small reverse-mode
//! autodiff engine.
//!
//! A transformer policy reads an instance as the sequence of its distance
//! matrix columns. Because sinusoidal position encodings make the policy
//! sensitive to city order, relabelling the cities yields genuinely different
//! greedy tours; decoding many relabelled copies and keeping the shortest tour
//! is the augmentation loop implemented in [`tta`].
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the CLI and the
//! thread-pool executor live in the `tsp-tta` companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod autodiff;
pub mod decoding;
mod error;
pub mod exec;
mod math;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod training;
pub mod tsp;
pub mod tta;

pub use crate::error::{Error, Result};
