//! File formats, a rayon executor and the `tsp-tta` command line for
//! [`tsp_tta_core`].

pub mod app;
pub mod checkpoint;
pub mod dataset;
pub mod decoder;
mod error;
pub mod executor;
pub mod keyvalue;

pub use error::{FormatError, Result};
