use serde::{Deserialize, Serialize};

use super::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
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

/// First and second moment estimates, one pair per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[&Tensor]) -> Self {
        AdamState {
            config,
            t: 0,
            m: params.iter().map(|p| Tensor::zeros_like(p)).collect(),
            v: params.iter().map(|p| Tensor::zeros_like(p)).collect(),
        }
    }
}

/// One bias-corrected Adam step over every `(param, grad)` pair.
///
/// Panics if the number or shapes of tensors differ from those the state was
/// built for.
pub fn adam_update(s: &mut AdamState, params: &mut [&mut Tensor], grads: &[&Tensor]) {
    assert_eq!(params.len(), s.m.len(), "parameter count changed");
    assert_eq!(grads.len(), s.m.len(), "gradient count changed");
    s.t += 1;
    let AdamConfig {
        lr,
        beta1,
        beta2,
        eps,
    } = s.config;
    let c1 = 1.0 - beta1.powi(s.t as i32);
    let c2 = 1.0 - beta2.powi(s.t as i32);
    for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        assert_eq!(
            p.shape(),
            g.shape(),
            "gradient shape mismatch at tensor {k}"
        );
        let m = s.m[k].data_mut();
        let v = s.v[k].data_mut();
        for (((p, &g), m), v) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.iter_mut())
            .zip(v.iter_mut())
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
    }
}
