//! Minimal dense-tensor core with reverse-mode differentiation.
//!
//! A [`Tape`] records an eager forward pass over rank-1/rank-2 tensors and
//! replays it backwards to accumulate gradients. The op set is exactly what
//! the model needs: matmul, elementwise arithmetic, sigmoid/tanh, column
//! concatenation, neighbor-sum aggregation over a fixed adjacency, row-wise
//! softmax and a masked cross-entropy loss. [`gru_cell`] composes primitive
//! ops, so its backward pass comes for free and is covered by [`grad_check`].

mod adam;
mod check;
mod gru;
mod tape;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use check::{grad_check, DiffLoss};
pub use gru::{gru_cell, gru_cell_on_tape, GruParams, GruVars};
pub use tape::{CeSpec, NeighborSpec, Tape, Var};

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense tensor of `f64` values with an optional gradient buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    /// Dimension list; rank 1 (`[d]`) and rank 2 (`[r, c]`) are supported.
    pub shape: Vec<usize>,
    /// Row-major flat values; length equals the product of `shape`.
    pub values: Vec<f64>,
    pub requires_grad: bool,
    /// Accumulated gradient, same length as `values` when present.
    pub grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let numel = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            values: vec![0.0; numel],
            requires_grad: false,
            grad: None,
        }
    }

    pub fn from_values(shape: &[usize], values: Vec<f64>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if values.len() != numel {
            return Err(Error::Shape(alloc::format!(
                "{} values do not fill shape {:?}",
                values.len(),
                shape
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            values,
            requires_grad: false,
            grad: None,
        })
    }

    pub fn vector(values: Vec<f64>) -> Self {
        Self {
            shape: vec![values.len()],
            values,
            requires_grad: false,
            grad: None,
        }
    }

    pub fn matrix(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        Self::from_values(&[rows, cols], values)
    }

    /// Weight initialization: uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn uniform_init(shape: &[usize], fan_in: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / crate::math::sqrt(fan_in.max(1) as f64);
        let numel: usize = shape.iter().product();
        let values = (0..numel)
            .map(|_| rng.random::<f64>() * 2.0 * bound - bound)
            .collect();
        Self {
            shape: shape.to_vec(),
            values,
            requires_grad: true,
            grad: None,
        }
    }

    pub fn with_grad(mut self) -> Self {
        self.requires_grad = true;
        self
    }

    pub fn numel(&self) -> usize {
        self.values.len()
    }

    /// Rows/cols view: rank-1 tensors are single rows.
    pub fn dims2(&self) -> (usize, usize) {
        match self.shape.as_slice() {
            [c] => (1, *c),
            [r, c] => (*r, *c),
            other => panic!("rank {} tensor where rank <= 2 expected", other.len()),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Add `delta` into the gradient buffer, allocating it on first use.
    pub fn accumulate_grad(&mut self, delta: &[f64]) {
        debug_assert_eq!(delta.len(), self.values.len());
        let grad = self
            .grad
            .get_or_insert_with(|| vec![0.0; self.values.len()]);
        for (g, d) in grad.iter_mut().zip(delta) {
            *g += d;
        }
    }

    pub fn zero_grad(&mut self) {
        if let Some(grad) = &mut self.grad {
            grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }
}

/// Row-wise softmax of a rank-2 tensor (or a single rank-1 row).
pub fn softmax(input: &Tensor) -> Tensor {
    let mut tape = Tape::new();
    let x = tape.leaf_tensor(input);
    let y = tape.softmax(x);
    let mut out = input.clone();
    out.requires_grad = false;
    out.grad = None;
    out.values = tape.value(y).to_vec();
    out
}

/// Mean over masked rows of `-ln(p(true class))`, with probabilities floored
/// at 1e-12 before the log. Masked rows must sum to 1 within 1e-6.
pub fn cross_entropy(probs: &Tensor, labels: &[u8], mask: &[bool]) -> Result<f64> {
    let mut tape = Tape::new();
    let p = tape.leaf_tensor(probs);
    let spec = alloc::rc::Rc::new(CeSpec {
        labels: labels.to_vec(),
        mask: mask.to_vec(),
    });
    let loss = tape.cross_entropy(p, spec)?;
    Ok(tape.value(loss)[0])
}

/// A named tensor, for optimizers, checkpoints and error messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub tensor: Tensor,
}
