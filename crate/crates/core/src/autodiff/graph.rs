use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{Tensor, LAYER_NORM_EPS, MASK_OFFSET};
use crate::math;
use crate::{Error, Result};

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Log(Var),
    GatherRows(Var, Vec<usize>),
    Concat(Vec<Var>, usize),
    SliceCols(Var, usize),
    Transpose(Var),
    Sum(Var),
    Mean(Var),
    Pick(Var, usize),
    Softmax(Var),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        normalized: Vec<f64>,
        inv_std: Vec<f64>,
    },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Append-only computation graph for one forward/backward pass.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

fn shape_err(op: &'static str, detail: alloc::string::String) -> Error {
    Error::Shape { op, detail }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Inserts a constant or parameter.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    fn dims2(&self, op: &'static str, v: Var) -> Result<(usize, usize)> {
        let t = self.value(v);
        match t.shape() {
            [r, c] => Ok((*r, *c)),
            s => Err(shape_err(op, format!("expected a matrix, got shape {s:?}"))),
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.dims2("matmul", a)?;
        let (k2, n) = self.dims2("matmul", b)?;
        if k != k2 {
            return Err(shape_err("matmul", format!("inner dimensions {k} and {k2} differ")));
        }
        let (ad, bd) = (self.value(a).data(), self.value(b).data());
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let out_row = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let aip = ad[i * k + p];
                if aip == 0.0 {
                    continue;
                }
                let b_row = &bd[p * n..(p + 1) * n];
                for (o, bv) in out_row.iter_mut().zip(b_row) {
                    *o += aip * bv;
                }
            }
        }
        let value = Tensor::new(vec![m, n], out)?;
        Ok(self.push(value, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if !ta.same_shape(tb) {
            return Err(shape_err(
                "add",
                format!("{:?} vs {:?}", ta.shape(), tb.shape()),
            ));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x + y).collect();
        let value = Tensor::new(ta.shape().to_vec(), data)?;
        Ok(self.push(value, Op::Add(a, b)))
    }

    /// Elementwise product of equally shaped tensors.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if !ta.same_shape(tb) {
            return Err(shape_err(
                "mul",
                format!("{:?} vs {:?}", ta.shape(), tb.shape()),
            ));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).collect();
        let value = Tensor::new(ta.shape().to_vec(), data)?;
        Ok(self.push(value, Op::Mul(a, b)))
    }

    /// Adds the vector `row` to every row of `a` (a bias add).
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (ta, tr) = (self.value(a), self.value(row));
        let d = ta.last_dim();
        if tr.shape() != [d] {
            return Err(shape_err(
                "add_row",
                format!("row of shape {:?} against last axis {d}", tr.shape()),
            ));
        }
        let rd = tr.data();
        let data = ta
            .data()
            .chunks(d)
            .flat_map(|chunk| chunk.iter().zip(rd).map(|(x, y)| x + y))
            .collect();
        let value = Tensor::new(ta.shape().to_vec(), data)?;
        Ok(self.push(value, Op::AddRow(a, row)))
    }

    pub fn mul_scalar(&mut self, a: Var, s: f64) -> Var {
        let ta = self.value(a);
        let data = ta.data().iter().map(|x| x * s).collect();
        let value = Tensor::new(ta.shape().to_vec(), data).expect("shape preserved");
        self.push(value, Op::Scale(a, s))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let ta = self.value(a);
        let data = ta.data().iter().map(|&x| if x > 0.0 { x } else { 0.0 }).collect();
        let value = Tensor::new(ta.shape().to_vec(), data).expect("shape preserved");
        self.push(value, Op::Relu(a))
    }

    /// Natural logarithm; every input must be strictly positive.
    pub fn log(&mut self, a: Var) -> Result<Var> {
        let ta = self.value(a);
        if let Some(&bad) = ta.data().iter().find(|&&x| x.is_nan() || x <= 0.0) {
            return Err(Error::Domain { op: "log", value: bad });
        }
        let data = ta.data().iter().map(|&x| math::ln(x)).collect();
        let value = Tensor::new(ta.shape().to_vec(), data)?;
        Ok(self.push(value, Op::Log(a)))
    }

    pub fn gather_rows(&mut self, a: Var, rows: &[usize]) -> Result<Var> {
        let (r, c) = self.dims2("gather_rows", a)?;
        if rows.is_empty() {
            return Err(Error::Empty("gather_rows"));
        }
        if let Some(&bad) = rows.iter().find(|&&i| i >= r) {
            return Err(Error::OutOfRange { index: bad, limit: r });
        }
        let ta = self.value(a);
        let mut data = Vec::with_capacity(rows.len() * c);
        for &i in rows {
            data.extend_from_slice(ta.row(i));
        }
        let value = Tensor::new(vec![rows.len(), c], data)?;
        Ok(self.push(value, Op::GatherRows(a, rows.to_vec())))
    }

    /// Concatenates matrices along `axis` (0 stacks rows, 1 joins columns).
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::Empty("concat"));
        }
        let dims = parts
            .iter()
            .map(|&p| self.dims2("concat", p))
            .collect::<Result<Vec<_>>>()?;
        let (r0, c0) = dims[0];
        let value = match axis {
            0 => {
                if let Some(&(_, c)) = dims.iter().find(|d| d.1 != c0) {
                    return Err(shape_err("concat", format!("column counts {c0} and {c} differ")));
                }
                let rows: usize = dims.iter().map(|d| d.0).sum();
                let mut data = Vec::with_capacity(rows * c0);
                for &p in parts {
                    data.extend_from_slice(self.value(p).data());
                }
                Tensor::new(vec![rows, c0], data)?
            }
            1 => {
                if let Some(&(r, _)) = dims.iter().find(|d| d.0 != r0) {
                    return Err(shape_err("concat", format!("row counts {r0} and {r} differ")));
                }
                let cols: usize = dims.iter().map(|d| d.1).sum();
                let mut data = Vec::with_capacity(r0 * cols);
                for i in 0..r0 {
                    for &p in parts {
                        data.extend_from_slice(self.value(p).row(i));
                    }
                }
                Tensor::new(vec![r0, cols], data)?
            }
            _ => return Err(shape_err("concat", format!("axis {axis} on matrices"))),
        };
        Ok(self.push(value, Op::Concat(parts.to_vec(), axis)))
    }

    /// Columns `start..start + len` of a matrix.
    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let (r, c) = self.dims2("slice_cols", a)?;
        if len == 0 || start + len > c {
            return Err(shape_err("slice_cols", format!("{start}..{} of {c} columns", start + len)));
        }
        let ta = self.value(a);
        let mut data = Vec::with_capacity(r * len);
        for i in 0..r {
            data.extend_from_slice(&ta.row(i)[start..start + len]);
        }
        let value = Tensor::new(vec![r, len], data)?;
        Ok(self.push(value, Op::SliceCols(a, start)))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let (r, c) = self.dims2("transpose", a)?;
        let ta = self.value(a);
        let mut data = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = ta.at(i, j);
            }
        }
        let value = Tensor::new(vec![c, r], data)?;
        Ok(self.push(value, Op::Transpose(a)))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let m = t.sum() / t.len() as f64;
        self.push(Tensor::scalar(m), Op::Mean(a))
    }

    /// Element `index` of the flattened tensor, as a scalar.
    pub fn pick(&mut self, a: Var, index: usize) -> Result<Var> {
        let t = self.value(a);
        if index >= t.len() {
            return Err(Error::OutOfRange { index, limit: t.len() });
        }
        let v = t.data()[index];
        Ok(self.push(Tensor::scalar(v), Op::Pick(a, index)))
    }

    /// Softmax along the last axis. `mask[i] == true` excludes flat position
    /// `i`: it receives the additive offset and then exactly zero probability.
    pub fn softmax(&mut self, x: Var, mask: Option<&[bool]>) -> Result<Var> {
        let tx = self.value(x);
        if let Some(m) = mask {
            if m.len() != tx.len() {
                return Err(shape_err(
                    "softmax",
                    format!("mask of length {} for {} values", m.len(), tx.len()),
                ));
            }
        }
        let d = tx.last_dim();
        let mut out = vec![0.0; tx.len()];
        for (r, (row, out_row)) in tx.data().chunks(d).zip(out.chunks_mut(d)).enumerate() {
            let masked = |j: usize| mask.is_some_and(|m| m[r * d + j]);
            if (0..d).all(masked) {
                return Err(Error::InvalidMask);
            }
            let shifted = |j: usize| row[j] + if masked(j) { MASK_OFFSET } else { 0.0 };
            let max = (0..d).map(shifted).fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for (j, o) in out_row.iter_mut().enumerate() {
                if !masked(j) {
                    let e = math::exp(shifted(j) - max);
                    *o = e;
                    total += e;
                }
            }
            for o in out_row.iter_mut() {
                *o /= total;
            }
        }
        let value = Tensor::new(tx.shape().to_vec(), out)?;
        Ok(self.push(value, Op::Softmax(x)))
    }

    /// Normalises each last-axis slice to zero mean and unit variance, then
    /// applies `gain` and `bias`.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var) -> Result<Var> {
        let tx = self.value(x);
        let d = tx.last_dim();
        if d < 2 {
            return Err(shape_err("layer_norm", format!("last axis {d} < 2")));
        }
        let (tg, tb) = (self.value(gain), self.value(bias));
        if tg.shape() != [d] || tb.shape() != [d] {
            return Err(shape_err(
                "layer_norm",
                format!("gain {:?} / bias {:?} for width {d}", tg.shape(), tb.shape()),
            ));
        }
        let mut normalized = vec![0.0; tx.len()];
        let mut inv_std = Vec::with_capacity(tx.len() / d);
        let mut out = vec![0.0; tx.len()];
        for (r, row) in tx.data().chunks(d).enumerate() {
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let inv = 1.0 / math::sqrt(var + LAYER_NORM_EPS);
            inv_std.push(inv);
            for j in 0..d {
                let h = (row[j] - mean) * inv;
                normalized[r * d + j] = h;
                out[r * d + j] = h * tg.data()[j] + tb.data()[j];
            }
        }
        let value = Tensor::new(tx.shape().to_vec(), out)?;
        Ok(self.push(
            value,
            Op::LayerNorm {
                x,
                gain,
                bias,
                normalized,
                inv_std,
            },
        ))
    }

    /// Reverse sweep from a scalar `loss`, accumulating gradients additively
    /// over every path.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let root = self.value(loss);
        if !root.is_scalar() {
            return Err(Error::NonScalarLoss(root.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = Vec::new();
        grads.resize_with(loss.0 + 1, || None);
        grads[loss.0] = Some(Tensor::filled(root.shape(), 1.0));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.pull_back(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn pull_back(&self, i: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[i];
        let gd = g.data();
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, k) = ta.dims2().expect("matrix");
                let n = tb.last_dim();
                // dA = G · Bᵀ
                let mut da = vec![0.0; m * k];
                for r in 0..m {
                    let g_row = &gd[r * n..(r + 1) * n];
                    for p in 0..k {
                        let b_row = tb.row(p);
                        da[r * k + p] = g_row.iter().zip(b_row).map(|(x, y)| x * y).sum();
                    }
                }
                // dB = Aᵀ · G
                let mut db = vec![0.0; k * n];
                for r in 0..m {
                    let g_row = &gd[r * n..(r + 1) * n];
                    for p in 0..k {
                        let arp = ta.at(r, p);
                        if arp == 0.0 {
                            continue;
                        }
                        for (o, gv) in db[p * n..(p + 1) * n].iter_mut().zip(g_row) {
                            *o += arp * gv;
                        }
                    }
                }
                accumulate(grads, *a, ta.shape(), da);
                accumulate(grads, *b, tb.shape(), db);
            }
            Op::Add(a, b) => {
                accumulate(grads, *a, g.shape(), gd.to_vec());
                accumulate(grads, *b, g.shape(), gd.to_vec());
            }
            Op::Mul(a, b) => {
                let (xa, xb) = (self.value(*a).data(), self.value(*b).data());
                let da = gd.iter().zip(xb).map(|(gv, y)| gv * y).collect();
                let db = gd.iter().zip(xa).map(|(gv, x)| gv * x).collect();
                accumulate(grads, *a, g.shape(), da);
                accumulate(grads, *b, g.shape(), db);
            }
            Op::AddRow(a, row) => {
                let d = g.last_dim();
                let mut dr = vec![0.0; d];
                for chunk in gd.chunks(d) {
                    for (o, v) in dr.iter_mut().zip(chunk) {
                        *o += v;
                    }
                }
                accumulate(grads, *a, g.shape(), gd.to_vec());
                accumulate(grads, *row, &[d], dr);
            }
            Op::Scale(a, s) => {
                accumulate(grads, *a, g.shape(), gd.iter().map(|v| v * s).collect());
            }
            Op::Relu(a) => {
                let xa = self.value(*a).data();
                let d = gd
                    .iter()
                    .zip(xa)
                    .map(|(gv, &x)| if x > 0.0 { *gv } else { 0.0 })
                    .collect();
                accumulate(grads, *a, g.shape(), d);
            }
            Op::Log(a) => {
                let xa = self.value(*a).data();
                let d = gd.iter().zip(xa).map(|(gv, x)| gv / x).collect();
                accumulate(grads, *a, g.shape(), d);
            }
            Op::GatherRows(a, rows) => {
                let ta = self.value(*a);
                let c = ta.last_dim();
                let mut d = vec![0.0; ta.len()];
                for (out_r, &src) in rows.iter().enumerate() {
                    for j in 0..c {
                        d[src * c + j] += gd[out_r * c + j];
                    }
                }
                accumulate(grads, *a, ta.shape(), d);
            }
            Op::Concat(parts, axis) => {
                let cols = g.last_dim();
                let mut offset = 0;
                for &p in parts {
                    let tp = self.value(p);
                    let (pr, pc) = tp.dims2().expect("matrix");
                    let d = if *axis == 0 {
                        let d = gd[offset * cols..(offset + pr) * cols].to_vec();
                        offset += pr;
                        d
                    } else {
                        let mut d = Vec::with_capacity(pr * pc);
                        for r in 0..pr {
                            d.extend_from_slice(&gd[r * cols + offset..r * cols + offset + pc]);
                        }
                        offset += pc;
                        d
                    };
                    accumulate(grads, p, tp.shape(), d);
                }
            }
            Op::SliceCols(a, start) => {
                let ta = self.value(*a);
                let c = ta.last_dim();
                let len = g.last_dim();
                let mut d = vec![0.0; ta.len()];
                for (r, chunk) in gd.chunks(len).enumerate() {
                    d[r * c + start..r * c + start + len].copy_from_slice(chunk);
                }
                accumulate(grads, *a, ta.shape(), d);
            }
            Op::Transpose(a) => {
                let (r, c) = g.dims2().expect("matrix");
                let mut d = vec![0.0; r * c];
                for i in 0..r {
                    for j in 0..c {
                        d[j * r + i] = gd[i * c + j];
                    }
                }
                accumulate(grads, *a, self.value(*a).shape(), d);
            }
            Op::Sum(a) => {
                let ta = self.value(*a);
                accumulate(grads, *a, ta.shape(), vec![gd[0]; ta.len()]);
            }
            Op::Mean(a) => {
                let ta = self.value(*a);
                let v = gd[0] / ta.len() as f64;
                accumulate(grads, *a, ta.shape(), vec![v; ta.len()]);
            }
            Op::Pick(a, index) => {
                let ta = self.value(*a);
                let mut d = vec![0.0; ta.len()];
                d[*index] = gd[0];
                accumulate(grads, *a, ta.shape(), d);
            }
            Op::Softmax(x) => {
                // dx = y ⊙ (g − ⟨y, g⟩) per row; masked entries have y = 0.
                let y = node.value.data();
                let d = node.value.last_dim();
                let mut dx = vec![0.0; y.len()];
                for ((yr, gr), out) in y.chunks(d).zip(gd.chunks(d)).zip(dx.chunks_mut(d)) {
                    let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for j in 0..d {
                        out[j] = yr[j] * (gr[j] - dot);
                    }
                }
                accumulate(grads, *x, node.value.shape(), dx);
            }
            Op::LayerNorm {
                x,
                gain,
                bias,
                normalized,
                inv_std,
            } => {
                let d = node.value.last_dim();
                let gain_d = self.value(*gain).data();
                let mut dx = vec![0.0; gd.len()];
                let mut dgain = vec![0.0; d];
                let mut dbias = vec![0.0; d];
                for (r, inv) in inv_std.iter().enumerate() {
                    let gr = &gd[r * d..(r + 1) * d];
                    let hr = &normalized[r * d..(r + 1) * d];
                    let mut sum_dh = 0.0;
                    let mut sum_dh_h = 0.0;
                    for j in 0..d {
                        dgain[j] += gr[j] * hr[j];
                        dbias[j] += gr[j];
                        let dh = gr[j] * gain_d[j];
                        sum_dh += dh;
                        sum_dh_h += dh * hr[j];
                    }
                    let scale = inv / d as f64;
                    for j in 0..d {
                        let dh = gr[j] * gain_d[j];
                        dx[r * d + j] = scale * (d as f64 * dh - sum_dh - hr[j] * sum_dh_h);
                    }
                }
                accumulate(grads, *x, node.value.shape(), dx);
                accumulate(grads, *gain, &[d], dgain);
                accumulate(grads, *bias, &[d], dbias);
            }
        }
    }
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, shape: &[usize], data: Vec<f64>) {
    let t = Tensor::new(shape.to_vec(), data).expect("gradient matches its node shape");
    match &mut grads[v.0] {
        Some(acc) => acc.add_assign(&t),
        slot @ None => *slot = Some(t),
    }
}

/// Gradients of one scalar with respect to every node that influenced it.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// `None` when `v` does not influence the loss (or was created after it).
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}
