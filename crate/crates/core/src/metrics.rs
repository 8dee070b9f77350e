//! Optimality gap and average tour length.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

/// `pred / opt − 1` for every instance.
pub fn per_instance_gaps(pred_lens: &[f64], opt_lens: &[f64]) -> Result<Vec<f64>> {
    if pred_lens.len() != opt_lens.len() {
        return Err(Error::SizeMismatch {
            expected: opt_lens.len(),
            got: pred_lens.len(),
        });
    }
    if pred_lens.is_empty() {
        return Err(Error::Empty("optimality gap"));
    }
    pred_lens
        .iter()
        .zip(opt_lens)
        .map(|(&p, &o)| {
            if o > 0.0 && o.is_finite() {
                Ok(p / o - 1.0)
            } else {
                Err(Error::NonPositiveOptimum(o))
            }
        })
        .collect()
}

/// Mean of `pred / opt − 1`, as a fraction.
pub fn optimality_gap(pred_lens: &[f64], opt_lens: &[f64]) -> Result<f64> {
    let gaps = per_instance_gaps(pred_lens, opt_lens)?;
    Ok(gaps.iter().sum::<f64>() / gaps.len() as f64)
}

pub fn average_tour_length(pred_lens: &[f64]) -> Result<f64> {
    if pred_lens.is_empty() {
        return Err(Error::Empty("average tour length"));
    }
    Ok(pred_lens.iter().sum::<f64>() / pred_lens.len() as f64)
}

/// A fraction rendered as a percentage with two decimals, e.g. `0.0112` → `"1.12%"`.
pub fn format_percent(fraction: f64) -> String {
    let pct = fraction * 100.0;
    // Round-off below optimum would otherwise print as "-0.00%".
    let pct = if pct.abs() < 0.005 { 0.0 } else { pct };
    format!("{pct:.2}%")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRow {
    pub id: usize,
    pub pred_len: f64,
    pub opt_len: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub mean_gap: f64,
    pub avg_len: f64,
}

impl EvalReport {
    pub fn new(pred_lens: &[f64], opt_lens: &[f64]) -> Result<Self> {
        let gaps = per_instance_gaps(pred_lens, opt_lens)?;
        let rows = gaps
            .iter()
            .enumerate()
            .map(|(id, &gap)| EvalRow {
                id,
                pred_len: pred_lens[id],
                opt_len: opt_lens[id],
                gap,
            })
            .collect();
        Ok(EvalReport {
            rows,
            mean_gap: gaps.iter().sum::<f64>() / gaps.len() as f64,
            avg_len: average_tour_length(pred_lens)?,
        })
    }

    pub fn k(&self) -> usize {
        self.rows.len()
    }

    /// CSV body with header `id,pred_len,opt_len,gap`, then one summary line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,pred_len,opt_len,gap\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:.6},{:.6},{:.6}\n", r.id, r.pred_len, r.opt_len, r.gap));
        }
        out.push_str(&format!(
            "# k={} mean_gap={} avg_len={:.6}\n",
            self.k(),
            format_percent(self.mean_gap),
            self.avg_len
        ));
        out
    }
}
