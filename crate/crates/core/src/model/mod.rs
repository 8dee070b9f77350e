//! Transformer policy over distance-matrix columns.
//!
//! The encoder reads `N + 1` tokens: a learned start token followed by one
//! token per city (its distance-matrix column, or its coordinates in the
//! ablation mode), each linearly embedded and offset by a sinusoidal position
//! code. The decoder is auto-regressive: its input sequence is the encoded start
//! token followed by the encoded rows of the cities chosen so far, and each step
//! projects the newest position to `N` logits with visited cities masked out.

mod config;
mod forward;
mod params;

pub use config::{InputMode, ModelConfig};
pub use forward::{
    decode_step, encode_instance, model_input, positional_encoding, DecoderState, EncoderMemory,
    PolicyPass, StepDistribution,
};
pub use params::{ParamSpec, PolicyParams};
pub(crate) use forward::argmax;
