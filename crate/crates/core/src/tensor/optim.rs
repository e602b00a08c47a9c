use super::params::{Gradients, ParamStore};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled weight decay: each step shrinks weights by `lr * l2 * w`.
    pub l2: f64,
    /// Global L2 norm cap for the gradient; `None` disables clipping.
    pub clip: Option<f64>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, l2: 1e-6, clip: Some(0.8) }
    }
}

/// Step learning-rate schedule: `lr * factor^(epoch / every)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub factor: f64,
    pub every: usize,
}

impl Default for LrSchedule {
    fn default() -> Self {
        LrSchedule { factor: 0.5, every: 3 }
    }
}

impl LrSchedule {
    pub fn lr_at(&self, base: f64, epoch: usize) -> f64 {
        if self.every == 0 {
            return base;
        }
        base * self.factor.powi((epoch / self.every) as i32)
    }
}

/// Adam over every trainable parameter of a [`ParamStore`].
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &ParamStore) -> Self {
        let zeros = |_| Vec::new();
        let m: Vec<Vec<f64>> = (0..params.len()).map(zeros).collect();
        Adam { config, v: m.clone(), m, step: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.config.lr = lr;
    }

    /// Applies one update. Missing gradients count as zero. Returns the
    /// gradient norm before clipping. A non-finite gradient leaves the
    /// parameters untouched and returns a numeric error.
    pub fn step(&mut self, params: &mut ParamStore, grads: &Gradients) -> Result<f64> {
        if let Some(id) = grads.first_non_finite() {
            return Err(Error::Numeric(format!(
                "non-finite gradient for parameter {:?} at step {}",
                params.name(id),
                self.step + 1
            )));
        }
        let norm = grads.global_norm();
        let scale = match self.config.clip {
            Some(c) if norm > c => c / norm,
            _ => 1.0,
        };
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps, l2, .. } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        let ids: Vec<_> = params.ids().collect();
        for id in ids {
            if !params.is_trainable(id) {
                continue;
            }
            let i = id.index();
            let w = params.get_mut(id).data_mut();
            if self.m[i].len() != w.len() {
                self.m[i] = vec![0.0; w.len()];
                self.v[i] = vec![0.0; w.len()];
            }
            let g = grads.get(id);
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for k in 0..w.len() {
                let gk = g.map_or(0.0, |g| g[k]) * scale;
                m[k] = beta1 * m[k] + (1.0 - beta1) * gk;
                v[k] = beta2 * v[k] + (1.0 - beta2) * gk * gk;
                let mhat = m[k] / bc1;
                let vhat = v[k] / bc2;
                w[k] -= lr * (mhat / (vhat.sqrt() + eps) + l2 * w[k]);
            }
        }
        Ok(norm)
    }
}
