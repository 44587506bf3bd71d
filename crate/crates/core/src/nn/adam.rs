use alloc::format;
use alloc::vec::Vec;

use super::{Array, Grads, ParamSet};
use crate::error::{dim, Result};

/// Bias-corrected Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step_count: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub first_moment: Vec<Array>,
    pub second_moment: Vec<Array>,
}

impl AdamState {
    /// Zeroed moments shaped like `params`, with the usual defaults
    /// (beta1 0.9, beta2 0.999, epsilon 1e-8).
    pub fn new(params: &ParamSet, learning_rate: f64) -> Self {
        let zeros: Vec<Array> = params.iter().map(|p| Array::zeros(p.value.shape())).collect();
        Self { step_count: 0, learning_rate, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, first_moment: zeros.clone(), second_moment: zeros }
    }

    /// Applies one descent step `params -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, params: &mut ParamSet, grads: &Grads) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.first_moment.len() {
            return Err(dim(format!("adam: {} parameters, {} gradients, {} moments", params.len(), grads.len(), self.first_moment.len())));
        }
        for (i, p) in params.iter().enumerate() {
            let s = p.value.shape();
            if grads.get(i).shape() != s || self.first_moment[i].shape() != s {
                return Err(dim(format!("adam: shape mismatch for {}", p.name)));
            }
        }
        self.step_count += 1;
        let t = self.step_count as f64;
        let c1 = 1.0 - libm::pow(self.beta1, t);
        let c2 = 1.0 - libm::pow(self.beta2, t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.learning_rate, self.epsilon);
        for (i, p) in params.iter_mut().enumerate() {
            let g = grads.get(i).data();
            let m = self.first_moment[i].data_mut();
            let v = self.second_moment[i].data_mut();
            for (k, w) in p.value.data_mut().iter_mut().enumerate() {
                m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                *w -= lr * m_hat / (libm::sqrt(v_hat) + eps);
            }
        }
        Ok(())
    }
}
