//! Eager tape for reverse-mode differentiation over rank-2 values.

use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::nn::Tensor;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Fixed neighbor lists for the aggregation op. `lists[v]` holds the nodes
/// whose representations sum into row `v`; `weights`, when present, scales
/// each contribution (weighted-aggregation mode).
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSpec {
    pub lists: Vec<Vec<u32>>,
    pub weights: Option<Vec<Vec<f64>>>,
}

/// Labels and row mask for the cross-entropy loss.
#[derive(Debug, Clone, PartialEq)]
pub struct CeSpec {
    pub labels: Vec<u8>,
    pub mask: Vec<bool>,
}

const CE_FLOOR: f64 = 1e-12;
const CE_ROW_SUM_TOL: f64 = 1e-6;

#[derive(Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    OneMinus(Var),
    ConcatCols(Vec<Var>),
    NeighborSum(Var, Rc<NeighborSpec>),
    Softmax(Var),
    CrossEntropy(Var, Rc<CeSpec>),
}

struct Node {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    op: Op,
    needs_grad: bool,
}

/// Records a forward computation and differentiates it in reverse.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, rows: usize, cols: usize, values: Vec<f64>, op: Op, needs_grad: bool) -> Var {
        debug_assert_eq!(values.len(), rows * cols);
        self.nodes.push(Node {
            rows,
            cols,
            values,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn leaf(&mut self, rows: usize, cols: usize, values: Vec<f64>, needs_grad: bool) -> Var {
        self.push(rows, cols, values, Op::Leaf, needs_grad)
    }

    pub fn leaf_tensor(&mut self, t: &Tensor) -> Var {
        let (rows, cols) = t.dims2();
        self.leaf(rows, cols, t.values.clone(), t.requires_grad)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].values
    }

    pub fn dims(&self, v: Var) -> (usize, usize) {
        (self.nodes[v.0].rows, self.nodes[v.0].cols)
    }

    /// Gradient of the last `backward` target with respect to `v`.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ar, ac) = self.dims(a);
        let (br, bc) = self.dims(b);
        if ac != br {
            return Err(Error::Shape(alloc::format!(
                "matmul: [{ar}, {ac}] x [{br}, {bc}]"
            )));
        }
        let mut out = vec![0.0; ar * bc];
        matmul_into(
            &self.nodes[a.0].values,
            ar,
            ac,
            &self.nodes[b.0].values,
            bc,
            &mut out,
        );
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(ar, bc, out, Op::MatMul(a, b), needs))
    }

    fn zip_same_shape(&mut self, a: Var, b: Var, op_name: &str) -> Result<(usize, usize)> {
        let (ar, ac) = self.dims(a);
        let (br, bc) = self.dims(b);
        if (ar, ac) != (br, bc) {
            return Err(Error::Shape(alloc::format!(
                "{op_name}: [{ar}, {ac}] vs [{br}, {bc}]"
            )));
        }
        Ok((ar, ac))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (r, c) = self.zip_same_shape(a, b, "add")?;
        let values = self.nodes[a.0]
            .values
            .iter()
            .zip(&self.nodes[b.0].values)
            .map(|(x, y)| x + y)
            .collect();
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(r, c, values, Op::Add(a, b), needs))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (r, c) = self.zip_same_shape(a, b, "sub")?;
        let values = self.nodes[a.0]
            .values
            .iter()
            .zip(&self.nodes[b.0].values)
            .map(|(x, y)| x - y)
            .collect();
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(r, c, values, Op::Sub(a, b), needs))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (r, c) = self.zip_same_shape(a, b, "mul")?;
        let values = self.nodes[a.0]
            .values
            .iter()
            .zip(&self.nodes[b.0].values)
            .map(|(x, y)| x * y)
            .collect();
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(r, c, values, Op::Mul(a, b), needs))
    }

    /// `[n, c]` plus a `[1, c]` row broadcast over every row.
    pub fn add_row(&mut self, m: Var, row: Var) -> Result<Var> {
        let (r, c) = self.dims(m);
        let (rr, rc) = self.dims(row);
        if rr != 1 || rc != c {
            return Err(Error::Shape(alloc::format!(
                "add_row: [{r}, {c}] + [{rr}, {rc}]"
            )));
        }
        let mut values = self.nodes[m.0].values.clone();
        let bias = self.nodes[row.0].values.clone();
        for chunk in values.chunks_mut(c) {
            for (v, b) in chunk.iter_mut().zip(&bias) {
                *v += b;
            }
        }
        let needs = self.needs(m) || self.needs(row);
        Ok(self.push(r, c, values, Op::AddRow(m, row), needs))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let (r, c) = self.dims(x);
        let values = self.nodes[x.0].values.iter().map(|&v| math::sigmoid(v)).collect();
        let needs = self.needs(x);
        self.push(r, c, values, Op::Sigmoid(x), needs)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let (r, c) = self.dims(x);
        let values = self.nodes[x.0].values.iter().map(|&v| math::tanh(v)).collect();
        let needs = self.needs(x);
        self.push(r, c, values, Op::Tanh(x), needs)
    }

    pub fn one_minus(&mut self, x: Var) -> Var {
        let (r, c) = self.dims(x);
        let values = self.nodes[x.0].values.iter().map(|&v| 1.0 - v).collect();
        let needs = self.needs(x);
        self.push(r, c, values, Op::OneMinus(x), needs)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::Shape("concat_cols of nothing".into()));
        }
        let (rows, _) = self.dims(parts[0]);
        let mut total = 0;
        for &p in parts {
            let (r, c) = self.dims(p);
            if r != rows {
                return Err(Error::Shape(alloc::format!(
                    "concat_cols: {rows} rows vs {r} rows"
                )));
            }
            total += c;
        }
        let mut values = vec![0.0; rows * total];
        let mut offset = 0;
        for &p in parts {
            let (_, c) = self.dims(p);
            let src = &self.nodes[p.0].values;
            for i in 0..rows {
                values[i * total + offset..i * total + offset + c]
                    .copy_from_slice(&src[i * c..(i + 1) * c]);
            }
            offset += c;
        }
        let needs = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(rows, total, values, Op::ConcatCols(parts.to_vec()), needs))
    }

    /// Row `v` of the output is the (optionally weighted) sum of the input
    /// rows listed in `spec.lists[v]`; empty lists produce zero rows.
    pub fn neighbor_sum(&mut self, h: Var, spec: Rc<NeighborSpec>) -> Result<Var> {
        let (rows, cols) = self.dims(h);
        if spec.lists.len() != rows {
            return Err(Error::Shape(alloc::format!(
                "neighbor_sum: {} lists over {} rows",
                spec.lists.len(),
                rows
            )));
        }
        if let Some(weights) = &spec.weights {
            if weights.len() != rows || weights.iter().zip(&spec.lists).any(|(w, l)| w.len() != l.len()) {
                return Err(Error::Shape("neighbor_sum: weights do not match lists".into()));
            }
        }
        let input = &self.nodes[h.0].values;
        let mut values = vec![0.0; rows * cols];
        for (v, list) in spec.lists.iter().enumerate() {
            let out_row = v * cols;
            for (k, &u) in list.iter().enumerate() {
                let w = spec.weights.as_ref().map_or(1.0, |ws| ws[v][k]);
                let in_row = u as usize * cols;
                for j in 0..cols {
                    values[out_row + j] += w * input[in_row + j];
                }
            }
        }
        let needs = self.needs(h);
        Ok(self.push(rows, cols, values, Op::NeighborSum(h, spec), needs))
    }

    pub fn softmax(&mut self, x: Var) -> Var {
        let (rows, cols) = self.dims(x);
        let input = &self.nodes[x.0].values;
        let mut values = vec![0.0; rows * cols];
        for i in 0..rows {
            let row = &input[i * cols..(i + 1) * cols];
            let max = row.iter().copied().fold(f64::NEG_INFINITY, math::fmax);
            let mut sum = 0.0;
            for j in 0..cols {
                let e = math::exp(row[j] - max);
                values[i * cols + j] = e;
                sum += e;
            }
            for j in 0..cols {
                values[i * cols + j] /= sum;
            }
        }
        let needs = self.needs(x);
        self.push(rows, cols, values, Op::Softmax(x), needs)
    }

    /// Mean over masked rows of `-ln(p(true class))`. Yields a `[1, 1]`
    /// scalar. Masked rows must sum to one within 1e-6 and the mask must
    /// select at least one row.
    pub fn cross_entropy(&mut self, probs: Var, spec: Rc<CeSpec>) -> Result<Var> {
        let (rows, cols) = self.dims(probs);
        if spec.labels.len() != rows || spec.mask.len() != rows {
            return Err(Error::Shape(alloc::format!(
                "cross_entropy: {} rows, {} labels, {} mask entries",
                rows,
                spec.labels.len(),
                spec.mask.len()
            )));
        }
        let masked = spec.mask.iter().filter(|&&m| m).count();
        if masked == 0 {
            return Err(Error::Evaluation("cross-entropy over an empty mask".into()));
        }
        let values = &self.nodes[probs.0].values;
        let mut total = 0.0;
        for i in 0..rows {
            if !spec.mask[i] {
                continue;
            }
            let row = &values[i * cols..(i + 1) * cols];
            let sum: f64 = row.iter().sum();
            if math::abs(sum - 1.0) > CE_ROW_SUM_TOL {
                return Err(Error::Evaluation(alloc::format!(
                    "probability row {i} sums to {sum}, expected 1"
                )));
            }
            let truth = spec.labels[i] as usize;
            if truth >= cols {
                return Err(Error::Evaluation(alloc::format!(
                    "label {truth} outside {cols} classes at row {i}"
                )));
            }
            total += -math::ln(math::fmax(row[truth], CE_FLOOR));
        }
        let loss = total / masked as f64;
        let needs = self.needs(probs);
        Ok(self.push(1, 1, vec![loss], Op::CrossEntropy(probs, spec), needs))
    }

    fn add_grad(&mut self, v: Var, delta: &[f64]) {
        if !self.nodes[v.0].needs_grad {
            return;
        }
        let slot = &mut self.grads[v.0];
        match slot {
            Some(g) => {
                for (a, b) in g.iter_mut().zip(delta) {
                    *a += b;
                }
            }
            None => *slot = Some(delta.to_vec()),
        }
    }

    /// Accumulate `d(loss)/d(node)` for every node that needs a gradient.
    /// `loss` must be a `[1, 1]` scalar.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let (r, c) = self.dims(loss);
        if (r, c) != (1, 1) {
            return Err(Error::Shape(alloc::format!(
                "backward target must be scalar, got [{r}, {c}]"
            )));
        }
        self.grads = vec![None; self.nodes.len()];
        self.grads[loss.0] = Some(vec![1.0]);
        for i in (0..self.nodes.len()).rev() {
            let Some(grad) = self.grads[i].clone() else {
                continue;
            };
            if !self.nodes[i].needs_grad {
                continue;
            }
            let op = self.nodes[i].op.clone();
            match op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (ar, ac) = self.dims(a);
                    let (_, bc) = self.dims(b);
                    if self.needs(a) {
                        // dA = dC . B^T
                        let bvals = &self.nodes[b.0].values;
                        let mut da = vec![0.0; ar * ac];
                        for i2 in 0..ar {
                            let drow = &grad[i2 * bc..(i2 + 1) * bc];
                            let darow = &mut da[i2 * ac..(i2 + 1) * ac];
                            for (dak, brow) in darow.iter_mut().zip(bvals.chunks_exact(bc)) {
                                *dak = drow.iter().zip(brow).map(|(d, b)| d * b).sum();
                            }
                        }
                        self.add_grad(a, &da);
                    }
                    if self.needs(b) {
                        // dB = A^T . dC
                        let avals = &self.nodes[a.0].values;
                        let mut db = vec![0.0; ac * bc];
                        for i2 in 0..ar {
                            let drow = &grad[i2 * bc..(i2 + 1) * bc];
                            let arow = &avals[i2 * ac..(i2 + 1) * ac];
                            for (&aik, dbrow) in arow.iter().zip(db.chunks_exact_mut(bc)) {
                                if aik != 0.0 {
                                    for (o, d) in dbrow.iter_mut().zip(drow) {
                                        *o += aik * d;
                                    }
                                }
                            }
                        }
                        self.add_grad(b, &db);
                    }
                }
                Op::Add(a, b) => {
                    self.add_grad(a, &grad);
                    self.add_grad(b, &grad);
                }
                Op::Sub(a, b) => {
                    self.add_grad(a, &grad);
                    let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
                    self.add_grad(b, &neg);
                }
                Op::Mul(a, b) => {
                    if self.needs(a) {
                        let da: Vec<f64> = grad
                            .iter()
                            .zip(&self.nodes[b.0].values)
                            .map(|(g, y)| g * y)
                            .collect();
                        self.add_grad(a, &da);
                    }
                    if self.needs(b) {
                        let db: Vec<f64> = grad
                            .iter()
                            .zip(&self.nodes[a.0].values)
                            .map(|(g, x)| g * x)
                            .collect();
                        self.add_grad(b, &db);
                    }
                }
                Op::AddRow(m, row) => {
                    self.add_grad(m, &grad);
                    if self.needs(row) {
                        let (_, c2) = self.dims(row);
                        let mut db = vec![0.0; c2];
                        for chunk in grad.chunks(c2) {
                            for (d, g) in db.iter_mut().zip(chunk) {
                                *d += g;
                            }
                        }
                        self.add_grad(row, &db);
                    }
                }
                Op::Sigmoid(x) => {
                    let dx: Vec<f64> = grad
                        .iter()
                        .zip(&self.nodes[i].values)
                        .map(|(g, y)| g * y * (1.0 - y))
                        .collect();
                    self.add_grad(x, &dx);
                }
                Op::Tanh(x) => {
                    let dx: Vec<f64> = grad
                        .iter()
                        .zip(&self.nodes[i].values)
                        .map(|(g, y)| g * (1.0 - y * y))
                        .collect();
                    self.add_grad(x, &dx);
                }
                Op::OneMinus(x) => {
                    let dx: Vec<f64> = grad.iter().map(|g| -g).collect();
                    self.add_grad(x, &dx);
                }
                Op::ConcatCols(parts) => {
                    let (rows, total) = (self.nodes[i].rows, self.nodes[i].cols);
                    let mut offset = 0;
                    for &p in &parts {
                        let (_, c2) = self.dims(p);
                        if self.needs(p) {
                            let mut dp = vec![0.0; rows * c2];
                            for r2 in 0..rows {
                                dp[r2 * c2..(r2 + 1) * c2].copy_from_slice(
                                    &grad[r2 * total + offset..r2 * total + offset + c2],
                                );
                            }
                            self.add_grad(p, &dp);
                        }
                        offset += c2;
                    }
                }
                Op::NeighborSum(h, spec) => {
                    let (rows, cols) = self.dims(h);
                    let mut dh = vec![0.0; rows * cols];
                    for (v, list) in spec.lists.iter().enumerate() {
                        let out_row = v * cols;
                        for (k, &u) in list.iter().enumerate() {
                            let w = spec.weights.as_ref().map_or(1.0, |ws| ws[v][k]);
                            let in_row = u as usize * cols;
                            for j in 0..cols {
                                dh[in_row + j] += w * grad[out_row + j];
                            }
                        }
                    }
                    self.add_grad(h, &dh);
                }
                Op::Softmax(x) => {
                    let (rows, cols) = self.dims(x);
                    let y = &self.nodes[i].values;
                    let mut dx = vec![0.0; rows * cols];
                    for r2 in 0..rows {
                        let yrow = &y[r2 * cols..(r2 + 1) * cols];
                        let grow = &grad[r2 * cols..(r2 + 1) * cols];
                        let dot: f64 = yrow.iter().zip(grow).map(|(a, b)| a * b).sum();
                        for j in 0..cols {
                            dx[r2 * cols + j] = yrow[j] * (grow[j] - dot);
                        }
                    }
                    self.add_grad(x, &dx);
                }
                Op::CrossEntropy(probs, spec) => {
                    let (rows, cols) = self.dims(probs);
                    let masked = spec.mask.iter().filter(|&&m| m).count() as f64;
                    let pvals = &self.nodes[probs.0].values;
                    let g = grad[0];
                    let mut dp = vec![0.0; rows * cols];
                    for r2 in 0..rows {
                        if !spec.mask[r2] {
                            continue;
                        }
                        let truth = spec.labels[r2] as usize;
                        let p = pvals[r2 * cols + truth];
                        if p > CE_FLOOR {
                            dp[r2 * cols + truth] = -g / (masked * p);
                        }
                    }
                    self.add_grad(probs, &dp);
                }
            }
        }
        Ok(())
    }
}

/// `out += A . B` with `A` of `ar x ac` and `B` of `ac x bc`.
fn matmul_into(a: &[f64], ar: usize, ac: usize, b: &[f64], bc: usize, out: &mut [f64]) {
    for i in 0..ar {
        let arow = &a[i * ac..(i + 1) * ac];
        let orow = &mut out[i * bc..(i + 1) * bc];
        for (&aik, brow) in arow.iter().zip(b.chunks_exact(bc)) {
            if aik != 0.0 {
                for (o, bv) in orow.iter_mut().zip(brow) {
                    *o += aik * bv;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(tape: &mut Tape, rows: usize, cols: usize, values: &[f64]) -> Var {
        tape.leaf(rows, cols, values.to_vec(), true)
    }

    #[test]
    fn matmul_known_product() {
        let mut tape = Tape::new();
        let a = leaf(&mut tape, 2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = leaf(&mut tape, 2, 2, &[5.0, 6.0, 7.0, 8.0]);
        let c = tape.matmul(a, b).unwrap();
        assert_eq!(tape.value(c), &[19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn matmul_shape_mismatch_is_error() {
        let mut tape = Tape::new();
        let a = leaf(&mut tape, 2, 3, &[0.0; 6]);
        let b = leaf(&mut tape, 2, 2, &[0.0; 4]);
        assert!(matches!(tape.matmul(a, b), Err(Error::Shape(_))));
    }

    #[test]
    fn backward_through_matmul_matches_hand_result() {
        // loss = sum(A.B) via CE-free path: use a 1x1 product so the scalar
        // is directly differentiable. loss = a*b, dloss/da = b, dloss/db = a.
        let mut tape = Tape::new();
        let a = leaf(&mut tape, 1, 1, &[3.0]);
        let b = leaf(&mut tape, 1, 1, &[5.0]);
        let c = tape.matmul(a, b).unwrap();
        tape.backward(c).unwrap();
        assert_eq!(tape.grad(a).unwrap(), &[5.0]);
        assert_eq!(tape.grad(b).unwrap(), &[3.0]);
    }

    #[test]
    fn neighbor_sum_aggregates_listed_rows() {
        let mut tape = Tape::new();
        let h = leaf(&mut tape, 3, 2, &[1.0, 0.0, 0.0, 1.0, 2.0, 2.0]);
        let spec = Rc::new(NeighborSpec {
            lists: vec![vec![1, 2], vec![], vec![0]],
            weights: None,
        });
        let out = tape.neighbor_sum(h, spec).unwrap();
        assert_eq!(tape.value(out), &[2.0, 3.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn weighted_neighbor_sum_scales_contributions() {
        let mut tape = Tape::new();
        let h = leaf(&mut tape, 2, 1, &[1.0, 10.0]);
        let spec = Rc::new(NeighborSpec {
            lists: vec![vec![1], vec![0]],
            weights: Some(vec![vec![0.5], vec![2.0]]),
        });
        let out = tape.neighbor_sum(h, spec).unwrap();
        assert_eq!(tape.value(out), &[5.0, 2.0]);
    }

    #[test]
    fn gradients_are_zero_sided_for_no_grad_leaves() {
        let mut tape = Tape::new();
        let a = tape.leaf(1, 1, vec![2.0], false);
        let b = tape.leaf(1, 1, vec![4.0], true);
        let c = tape.mul(a, b).unwrap();
        tape.backward(c).unwrap();
        assert!(tape.grad(a).is_none());
        assert_eq!(tape.grad(b).unwrap(), &[2.0]);
    }
}
