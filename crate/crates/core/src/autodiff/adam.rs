//! Bias-corrected Adam over a flat parameter vector.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            lr: 1e-4,
            beta1: 0.0,
            beta2: 0.9,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdamState {
    pub hyper: AdamHyper,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(hyper: AdamHyper, param_count: usize) -> Self {
        AdamState {
            hyper,
            t: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One minimizing update: params -= lr·m̂ / (sqrt(v̂) + eps).
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len(), "parameter count mismatch");
        assert_eq!(grads.len(), self.m.len(), "gradient count mismatch");
        self.t += 1;
        let AdamHyper {
            lr,
            beta1,
            beta2,
            eps,
        } = self.hyper;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut adam = AdamState::new(AdamHyper::default(), 3);
        let mut p = vec![1.0, -2.0, 0.5];
        adam.step(&mut p, &[0.0, 0.0, 0.0]);
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn constant_gradient_update_approaches_lr() {
        let hyper = AdamHyper::default();
        let mut adam = AdamState::new(hyper, 1);
        let mut p = vec![0.0];
        let mut last = p[0];
        for _ in 0..200 {
            last = p[0];
            adam.step(&mut p, &[2.5]);
        }
        let update = (p[0] - last).abs();
        assert!(
            (update - hyper.lr).abs() < 1e-6,
            "steady-state update {update} should approach lr {}",
            hyper.lr
        );
        assert!(p[0] < 0.0, "positive gradient must decrease the parameter");
    }

    #[test]
    fn defaults_match_contract() {
        let h = AdamHyper::default();
        assert_eq!(h.lr, 1e-4);
        assert_eq!(h.beta1, 0.0);
        assert_eq!(h.beta2, 0.9);
        assert_eq!(h.eps, 1e-8);
    }
}
