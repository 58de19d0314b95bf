use serde::{Deserialize, Serialize};

use crate::autodiff::{ParamGrads, ParamId, ParamStore};

/// Adam with bias correction. Each parameter keeps its own step count, so
/// parameters updated only in alternate phases are corrected by the number
/// of updates they actually received.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: Vec<u64>,
}

impl Adam {
    pub fn new(store: &ParamStore, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        let zeros: Vec<Vec<f64>> = store.iter().map(|(_, _, t)| vec![0.0; t.len()]).collect();
        Self {
            lr,
            beta1,
            beta2,
            eps,
            m: zeros.clone(),
            v: zeros,
            t: vec![0; store.len()],
        }
    }

    pub fn steps(&self, id: ParamId) -> u64 {
        self.t[id.index()]
    }

    /// Updates the parameters in `active`; all others are left untouched.
    pub fn step(&mut self, store: &mut ParamStore, grads: &ParamGrads, active: &[ParamId]) {
        for &id in active {
            let i = id.index();
            self.t[i] += 1;
            let t = self.t[i] as i32;
            let c1 = 1.0 - self.beta1.powi(t);
            let c2 = 1.0 - self.beta2.powi(t);
            let g = grads.get(id);
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (k, w) in store.get_mut(id).data_mut().iter_mut().enumerate() {
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * g[k];
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                *w -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}
