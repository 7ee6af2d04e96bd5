use serde::{Deserialize, Serialize};

use super::matrix::{Matrix, Scalar};
use super::mlp::Params;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    /// β1 = 0.5 is the usual choice for adversarial training; it is used for
    /// every optimizer in the toolkit.
    fn default() -> Self {
        AdamConfig {
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second-moment accumulators for one parameter set.
#[derive(Debug, Clone)]
pub struct AdamState<T: Scalar = f32> {
    pub config: AdamConfig,
    step: u64,
    moments: Vec<(Matrix<T>, Matrix<T>)>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig) -> Self {
        AdamState {
            config,
            step: 0,
            moments: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update over every parameter of `model`.
    ///
    /// Gradients are validated before any parameter moves, so a non-finite
    /// gradient leaves the model untouched.
    pub fn step<P: Params<T> + ?Sized>(&mut self, model: &mut P, lr: f64) -> Result<()> {
        let mut params = model.params_mut();
        for p in &params {
            if !p.grad.is_finite() {
                return Err(Error::NonFinite(format!("gradient of {}", p.name)));
            }
        }
        if self.moments.is_empty() {
            self.moments = params
                .iter()
                .map(|p| {
                    let (r, c) = p.value.shape();
                    (Matrix::zeros(r, c), Matrix::zeros(r, c))
                })
                .collect();
        }
        if self.moments.len() != params.len() {
            return Err(Error::Config(format!(
                "optimizer state tracks {} tensors, model has {}",
                self.moments.len(),
                params.len()
            )));
        }
        self.step += 1;
        let AdamConfig { beta1, beta2, eps } = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        let (b1, b2) = (T::from_f64(beta1), T::from_f64(beta2));
        let (one_b1, one_b2) = (T::from_f64(1.0 - beta1), T::from_f64(1.0 - beta2));
        let (bc1, bc2) = (T::from_f64(bc1), T::from_f64(bc2));
        let (lr, eps) = (T::from_f64(lr), T::from_f64(eps));

        for (p, (m, v)) in params.iter_mut().zip(self.moments.iter_mut()) {
            if m.shape() != p.value.shape() {
                return Err(Error::Shape {
                    op: "adam_step",
                    left: m.shape(),
                    right: p.value.shape(),
                });
            }
            let values = p.value.data_mut();
            let grads = p.grad.data();
            for (((w, &g), mi), vi) in values
                .iter_mut()
                .zip(grads)
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *mi = b1 * *mi + one_b1 * g;
                *vi = b2 * *vi + one_b2 * g * g;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *w = *w - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
