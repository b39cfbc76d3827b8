//! Adam optimizer with bias correction.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::nn::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamHyper {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Step counter and moment accumulators, one pair of buffers per parameter
/// tensor, in the caller's parameter order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub hyper: AdamHyper,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(hyper: AdamHyper, param_sizes: &[usize]) -> Self {
        Self {
            step: 0,
            hyper,
            first: param_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second: param_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }
}

/// One Adam update. `params` and `grads` are aligned by index; parameter
/// names feed error messages when a gradient is non-finite.
pub fn adam_step(
    params: &mut [(&str, &mut Tensor)],
    grads: &[Vec<f64>],
    state: &mut AdamState,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first.len() {
        return Err(Error::Shape(alloc::format!(
            "adam_step: {} params, {} grads, {} state slots",
            params.len(),
            grads.len(),
            state.first.len()
        )));
    }
    for ((name, tensor), grad) in params.iter().zip(grads) {
        if tensor.numel() != grad.len() {
            return Err(Error::Shape(alloc::format!(
                "adam_step: parameter `{name}` has {} values but {} grads",
                tensor.numel(),
                grad.len()
            )));
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Optimizer {
                param: name.to_string(),
            });
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let h = state.hyper;
    let bias1 = 1.0 - libm::pow(h.beta1, t as f64);
    let bias2 = 1.0 - libm::pow(h.beta2, t as f64);
    for (i, (_, tensor)) in params.iter_mut().enumerate() {
        let m = &mut state.first[i];
        let v = &mut state.second[i];
        for (j, &g) in grads[i].iter().enumerate() {
            m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g;
            v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g * g;
            let m_hat = m[j] / bias1;
            let v_hat = v[j] / bias2;
            tensor.values[j] -= h.lr * m_hat / (math::sqrt(v_hat) + h.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_param(values: Vec<f64>) -> Tensor {
        Tensor::vector(values).with_grad()
    }

    #[test]
    fn zero_grad_leaves_params_and_increments_step() {
        let mut p = one_param(vec![1.0, -2.0]);
        let mut state = AdamState::new(AdamHyper::default(), &[2]);
        adam_step(&mut [("w", &mut p)], &[vec![0.0, 0.0]], &mut state).unwrap();
        assert_eq!(p.values, vec![1.0, -2.0]);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        // With bias correction, the first update is lr * g / (|g| + eps').
        let lr = 0.01;
        let mut p = one_param(vec![0.0, 0.0]);
        let mut state = AdamState::new(AdamHyper::with_lr(lr), &[2]);
        adam_step(&mut [("w", &mut p)], &[vec![3.0, -0.5]], &mut state).unwrap();
        assert!((p.values[0] + lr).abs() < 1e-6);
        assert!((p.values[1] - lr).abs() < 1e-6);
    }

    #[test]
    fn repeated_equal_grads_are_deterministic() {
        let run = || {
            let mut p = one_param(vec![1.0]);
            let mut state = AdamState::new(AdamHyper::default(), &[1]);
            for _ in 0..2 {
                adam_step(&mut [("w", &mut p)], &[vec![0.1]], &mut state).unwrap();
            }
            p.values[0]
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_grad_names_parameter() {
        let mut p = one_param(vec![1.0]);
        let mut state = AdamState::new(AdamHyper::default(), &[1]);
        let err = adam_step(&mut [("gru.wz", &mut p)], &[vec![f64::NAN]], &mut state).unwrap_err();
        match err {
            Error::Optimizer { param } => assert_eq!(param, "gru.wz"),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
