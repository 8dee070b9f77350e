#![allow(dead_code)]

use tsp_tta_core::model::{InputMode, ModelConfig};

pub fn tiny(n: usize) -> ModelConfig {
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

/// Every ordering of `0..n`.
pub fn all_orders(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                prefix.push(c);
                rec(prefix, used, out);
                prefix.pop();
                used[c] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}
