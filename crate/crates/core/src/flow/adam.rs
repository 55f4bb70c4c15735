//! Adam with decoupled weight decay, operating on flat parameter vectors.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// First/second moment accumulators plus the step counter.
///
/// Defaults follow the usual beta1 = 0.9, beta2 = 0.999 and weight decay
/// 0.01; decay is decoupled (applied to the parameters directly, not mixed
/// into the moments).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.01,
        }
    }

    pub fn with_weight_decay(mut self, wd: f64) -> Self {
        self.weight_decay = wd;
        self
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One minimizing step: `params -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * params)`.
    ///
    /// Deterministic; errors if the gradient contains a non-finite entry.
    pub fn update(&mut self, params: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::dim(self.m.len(), grad.len()));
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("adam gradient".into()));
        }
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / b1t;
            let v_hat = self.v[i] / b2t;
            params[i] -= lr * (m_hat / (v_hat.sqrt() + self.epsilon) + self.weight_decay * params[i]);
        }
        Ok(())
    }
}
