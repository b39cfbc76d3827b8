//! Gated recurrent unit cell, composed from tape primitives.
//!
//! Gate convention: `z = sigmoid(Wz x + Uz h + bz)`, `r = sigmoid(Wr x + Ur h
//! + br)`, `h~ = tanh(Wh x + Uh (r . h) + bh)`, output `(1 - z) . h + z . h~`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::tape::{Tape, Var};
use crate::nn::Tensor;

/// Update-gate, reset-gate and candidate weights/biases. Input-path weights
/// are `input x hidden`, hidden-path weights `hidden x hidden`, biases
/// `hidden`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruParams {
    pub wz: Tensor,
    pub uz: Tensor,
    pub bz: Tensor,
    pub wr: Tensor,
    pub ur: Tensor,
    pub br: Tensor,
    pub wh: Tensor,
    pub uh: Tensor,
    pub bh: Tensor,
}

impl GruParams {
    pub fn init(input_dim: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let w = |rng: &mut _| Tensor::uniform_init(&[input_dim, hidden], input_dim, rng);
        let u = |rng: &mut _| Tensor::uniform_init(&[hidden, hidden], hidden, rng);
        let b = || Tensor::zeros(&[1, hidden]).with_grad();
        Self {
            wz: w(rng),
            uz: u(rng),
            bz: b(),
            wr: w(rng),
            ur: u(rng),
            br: b(),
            wh: w(rng),
            uh: u(rng),
            bh: b(),
        }
    }

    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            wz: Tensor::zeros(&[input_dim, hidden]),
            uz: Tensor::zeros(&[hidden, hidden]),
            bz: Tensor::zeros(&[1, hidden]),
            wr: Tensor::zeros(&[input_dim, hidden]),
            ur: Tensor::zeros(&[hidden, hidden]),
            br: Tensor::zeros(&[1, hidden]),
            wh: Tensor::zeros(&[input_dim, hidden]),
            uh: Tensor::zeros(&[hidden, hidden]),
            bh: Tensor::zeros(&[1, hidden]),
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.uz.shape[0]
    }

    pub fn input_dim(&self) -> usize {
        self.wz.shape[0]
    }

    pub fn validate(&self) -> Result<()> {
        let hidden = self.hidden_size();
        let input = self.input_dim();
        let expect = [
            (&self.wz, [input, hidden]),
            (&self.uz, [hidden, hidden]),
            (&self.bz, [1, hidden]),
            (&self.wr, [input, hidden]),
            (&self.ur, [hidden, hidden]),
            (&self.br, [1, hidden]),
            (&self.wh, [input, hidden]),
            (&self.uh, [hidden, hidden]),
            (&self.bh, [1, hidden]),
        ];
        for (tensor, shape) in expect {
            if tensor.shape != shape {
                return Err(Error::Shape(alloc::format!(
                    "GRU parameter has shape {:?}, expected {:?}",
                    tensor.shape,
                    shape
                )));
            }
        }
        Ok(())
    }

    pub fn named(&self) -> [(&'static str, &Tensor); 9] {
        [
            ("gru.wz", &self.wz),
            ("gru.uz", &self.uz),
            ("gru.bz", &self.bz),
            ("gru.wr", &self.wr),
            ("gru.ur", &self.ur),
            ("gru.br", &self.br),
            ("gru.wh", &self.wh),
            ("gru.uh", &self.uh),
            ("gru.bh", &self.bh),
        ]
    }

    pub fn named_mut(&mut self) -> [(&'static str, &mut Tensor); 9] {
        [
            ("gru.wz", &mut self.wz),
            ("gru.uz", &mut self.uz),
            ("gru.bz", &mut self.bz),
            ("gru.wr", &mut self.wr),
            ("gru.ur", &mut self.ur),
            ("gru.br", &mut self.br),
            ("gru.wh", &mut self.wh),
            ("gru.uh", &mut self.uh),
            ("gru.bh", &mut self.bh),
        ]
    }

    /// Record the parameters as leaves on a tape.
    pub fn push(&self, tape: &mut Tape) -> GruVars {
        GruVars {
            wz: tape.leaf_tensor(&self.wz),
            uz: tape.leaf_tensor(&self.uz),
            bz: tape.leaf_tensor(&self.bz),
            wr: tape.leaf_tensor(&self.wr),
            ur: tape.leaf_tensor(&self.ur),
            br: tape.leaf_tensor(&self.br),
            wh: tape.leaf_tensor(&self.wh),
            uh: tape.leaf_tensor(&self.uh),
            bh: tape.leaf_tensor(&self.bh),
        }
    }
}

/// Tape handles of one [`GruParams`] instance.
#[derive(Debug, Clone, Copy)]
pub struct GruVars {
    pub wz: Var,
    pub uz: Var,
    pub bz: Var,
    pub wr: Var,
    pub ur: Var,
    pub br: Var,
    pub wh: Var,
    pub uh: Var,
    pub bh: Var,
}

impl GruVars {
    pub fn vars(&self) -> [Var; 9] {
        [
            self.wz, self.uz, self.bz, self.wr, self.ur, self.br, self.wh, self.uh, self.bh,
        ]
    }
}

/// One GRU step on the tape: `h_prev` and `x` are `[n, hidden]` and
/// `[n, input]` row batches.
pub fn gru_cell_on_tape(tape: &mut Tape, h_prev: Var, x: Var, p: &GruVars) -> Result<Var> {
    let gate = |tape: &mut Tape, w: Var, u: Var, b: Var| -> Result<Var> {
        let xa = tape.matmul(x, w)?;
        let hb = tape.matmul(h_prev, u)?;
        let sum = tape.add(xa, hb)?;
        tape.add_row(sum, b)
    };
    let z_in = gate(tape, p.wz, p.uz, p.bz)?;
    let z = tape.sigmoid(z_in);
    let r_in = gate(tape, p.wr, p.ur, p.br)?;
    let r = tape.sigmoid(r_in);
    let xa = tape.matmul(x, p.wh)?;
    let rh = tape.mul(r, h_prev)?;
    let hb = tape.matmul(rh, p.uh)?;
    let cand_in = tape.add(xa, hb)?;
    let cand_in = tape.add_row(cand_in, p.bh)?;
    let cand = tape.tanh(cand_in);
    let keep = tape.one_minus(z);
    let kept = tape.mul(keep, h_prev)?;
    let new = tape.mul(z, cand)?;
    tape.add(kept, new)
}

/// Standalone GRU step over plain tensors. Accepts a single vector or a
/// `[n, d]` batch; the batch result equals independent single-row calls.
pub fn gru_cell(h_prev: &Tensor, x: &Tensor, params: &GruParams) -> Result<Tensor> {
    params.validate()?;
    let (hr, hc) = h_prev.dims2();
    let (xr, xc) = x.dims2();
    if hr != xr {
        return Err(Error::Shape(alloc::format!(
            "gru_cell: {hr} hidden rows vs {xr} input rows"
        )));
    }
    if hc != params.hidden_size() || xc != params.input_dim() {
        return Err(Error::Shape(alloc::format!(
            "gru_cell: rows of [{hr}, {hc}] / [{xr}, {xc}] vs gru {}x{}",
            params.input_dim(),
            params.hidden_size()
        )));
    }
    let mut tape = Tape::new();
    let h = tape.leaf(hr, hc, h_prev.values.clone(), false);
    let xv = tape.leaf(xr, xc, x.values.clone(), false);
    let vars = params.push(&mut tape);
    let out = gru_cell_on_tape(&mut tape, h, xv, &vars)?;
    let mut result = Tensor::from_values(&h_prev.shape, tape.value(out).to_vec())?;
    result.requires_grad = false;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math;
    use alloc::vec;

    /// Scalar reference evaluation of the gate formulas, written directly
    /// from the definitions, independent of the tensor path.
    fn scalar_gru(
        h: &[f64],
        x: &[f64],
        p: &GruParams,
    ) -> Vec<f64> {
        let hidden = p.hidden_size();
        let input = p.input_dim();
        let dot_col = |w: &Tensor, v: &[f64], col: usize, rows: usize| -> f64 {
            (0..rows).map(|i| v[i] * w.values[i * hidden + col]).sum()
        };
        (0..hidden)
            .map(|j| {
                let z = math::sigmoid(
                    dot_col(&p.wz, x, j, input) + dot_col(&p.uz, h, j, hidden) + p.bz.values[j],
                );
                let r = math::sigmoid(
                    dot_col(&p.wr, x, j, input) + dot_col(&p.ur, h, j, hidden) + p.br.values[j],
                );
                let rh: Vec<f64> = (0..hidden)
                    .map(|i| {
                        let ri = math::sigmoid(
                            dot_col(&p.wr, x, i, input)
                                + dot_col(&p.ur, h, i, hidden)
                                + p.br.values[i],
                        );
                        ri * h[i]
                    })
                    .collect();
                let _ = r;
                let cand = math::tanh(
                    dot_col(&p.wh, x, j, input) + dot_col(&p.uh, &rh, j, hidden) + p.bh.values[j],
                );
                let zj = z;
                (1.0 - zj) * h[j] + zj * cand
            })
            .collect()
    }

    #[test]
    fn zero_params_and_zero_state_stay_zero() {
        // z = 0.5 and the candidate is 0, so the output is 0.
        let p = GruParams::zeros(3, 2);
        let h = Tensor::vector(vec![0.0, 0.0]);
        let x = Tensor::vector(vec![7.0, -1.0, 3.0]);
        let out = gru_cell(&h, &x, &p).unwrap();
        assert_eq!(out.values, vec![0.0, 0.0]);
    }

    #[test]
    fn batch_equals_independent_rows() {
        let mut rng = crate::rng::seed_rng(11);
        let p = GruParams::init(2, 3, &mut rng);
        let h = Tensor::matrix(2, 3, vec![0.1, -0.2, 0.3, 0.5, 0.0, -0.7]).unwrap();
        let x = Tensor::matrix(2, 2, vec![1.0, 2.0, -1.0, 0.5]).unwrap();
        let batch = gru_cell(&h, &x, &p).unwrap();
        for row in 0..2 {
            let hr = Tensor::vector(h.values[row * 3..(row + 1) * 3].to_vec());
            let xr = Tensor::vector(x.values[row * 2..(row + 1) * 2].to_vec());
            let single = gru_cell(&hr, &xr, &p).unwrap();
            assert_eq!(single.values, batch.values[row * 3..(row + 1) * 3].to_vec());
        }
    }

    #[test]
    fn matches_scalar_reference_on_random_case() {
        let mut rng = crate::rng::seed_rng(23);
        let p = GruParams::init(3, 3, &mut rng);
        let h = Tensor::vector(vec![0.25, -0.5, 0.75]);
        let x = Tensor::vector(vec![-1.5, 0.25, 2.0]);
        let got = gru_cell(&h, &x, &p).unwrap();
        let want = scalar_gru(&h.values, &x.values, &p);
        for (g, w) in got.values.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let p = GruParams::zeros(3, 2);
        let h = Tensor::vector(vec![0.0, 0.0]);
        let x = Tensor::vector(vec![1.0, 2.0]); // input dim 2, params expect 3
        assert!(matches!(gru_cell(&h, &x, &p), Err(Error::Shape(_))));
    }
}
