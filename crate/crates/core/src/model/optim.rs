//! SGD with classical momentum: `v = mu v + g; theta -= lr v`.

use serde::{Deserialize, Serialize};

pub const DEFAULT_LR: f64 = 1e-2;
pub const DEFAULT_MOMENTUM: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sgd {
    pub lr: f64,
    pub momentum: f64,
    velocity: Vec<f64>,
}

impl Sgd {
    pub fn new(lr: f64, momentum: f64) -> Self {
        Sgd { lr, momentum, velocity: Vec::new() }
    }

    /// Updates `params` in place; the velocity is sized on first use.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), grads.len(), "parameter and gradient lengths differ");
        if self.velocity.len() != params.len() {
            self.velocity = vec![0.0; params.len()];
        }
        for ((p, v), g) in params.iter_mut().zip(self.velocity.iter_mut()).zip(grads) {
            *v = self.momentum * *v + g;
            *p -= self.lr * *v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_grad_and_zero_lr_keep_params() {
        let mut p = vec![1.0, -2.0];
        Sgd::new(0.1, 0.9).step(&mut p, &[0.0, 0.0]);
        assert_eq!(p, vec![1.0, -2.0]);
        Sgd::new(0.0, 0.9).step(&mut p, &[3.0, 4.0]);
        assert_eq!(p, vec![1.0, -2.0]);
    }

    #[test]
    fn quadratic_converges() {
        // f = (theta - 3)^2 / 2
        let mut p = [10.0];
        let mut opt = Sgd::new(0.1, DEFAULT_MOMENTUM);
        for _ in 0..500 {
            let g = [p[0] - 3.0];
            opt.step(&mut p, &g);
        }
        assert!((p[0] - 3.0).abs() < 1e-6, "{}", p[0]);
    }
}
