//! Adaptive-moment optimizer.

use super::tensor::{Real, Tensor};
use crate::error::{Result, RfError};

#[derive(Debug, Clone)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Per-parameter first/second moment accumulators plus the step counter.
#[derive(Debug, Clone)]
pub struct Adam<T: Real> {
    pub cfg: AdamConfig,
    step: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Real> Adam<T> {
    pub fn new(cfg: AdamConfig) -> Self {
        Adam {
            cfg,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over parallel slices of parameters and gradients.
    /// Accumulators are allocated lazily on the first call.
    pub fn step(&mut self, params: &mut [&mut Tensor<T>], grads: &[Tensor<T>]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(RfError::Shape(format!(
                "{} parameter blocks vs {} gradient blocks",
                params.len(),
                grads.len()
            )));
        }
        if self.m.is_empty() {
            self.m = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
            self.v = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() || p.shape() != self.m[i].shape() {
                return Err(RfError::Shape(format!(
                    "optimizer block {i}: param {:?} vs grad {:?}",
                    p.shape(),
                    g.shape()
                )));
            }
        }
        self.step += 1;
        let b1 = T::from_f64(self.cfg.beta1);
        let b2 = T::from_f64(self.cfg.beta2);
        let one = T::one();
        let lr = T::from_f64(self.cfg.lr);
        let eps = T::from_f64(self.cfg.eps);
        let bc1 = one - T::from_f64(self.cfg.beta1.powi(self.step as i32));
        let bc2 = one - T::from_f64(self.cfg.beta2.powi(self.step as i32));
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for (((pv, &gv), mv), vv) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut().iter_mut())
                .zip(v.data_mut().iter_mut())
            {
                *mv = b1 * *mv + (one - b1) * gv;
                *vv = b2 * *vv + (one - b2) * gv * gv;
                let mhat = *mv / bc1;
                let vhat = *vv / bc2;
                *pv -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn param(vals: &[f64]) -> Tensor<f64> {
        Tensor::from_vec(&[vals.len()], vals.to_vec()).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_fresh_params_unchanged() {
        let mut p = param(&[1.0, -2.0, 3.0]);
        let before = p.clone();
        let mut opt = Adam::new(AdamConfig::default());
        opt.step(&mut [&mut p], &[Tensor::zeros(&[3])]).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn constant_gradient_moves_against_its_sign() {
        let mut p = param(&[0.0, 0.0]);
        let g = param(&[0.5, -0.125]);
        let mut opt = Adam::new(AdamConfig::default());
        for _ in 0..50 {
            opt.step(&mut [&mut p], std::slice::from_ref(&g)).unwrap();
        }
        assert!(p.data()[0] < 0.0);
        assert!(p.data()[1] > 0.0);
    }

    #[test]
    fn update_is_deterministic() {
        let run = || {
            let mut p = param(&[0.3, -0.7, 0.1]);
            let g = param(&[0.01, 0.02, -0.03]);
            let mut opt = Adam::new(AdamConfig::default());
            for _ in 0..10 {
                opt.step(&mut [&mut p], std::slice::from_ref(&g)).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let mut p = param(&[1.0, 2.0]);
        let g = param(&[1.0, 2.0, 3.0]);
        let mut opt = Adam::new(AdamConfig::default());
        assert!(opt.step(&mut [&mut p], std::slice::from_ref(&g)).is_err());
    }
}
