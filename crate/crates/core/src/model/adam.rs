use crate::error::{Error, Result};

use super::params::{Grads, ModelParams};

/// Bias-corrected Adam moments for every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
            beta1,
            beta2,
            eps,
        }
    }

    pub fn for_params(params: &ModelParams, cfg: &super::ModelConfig) -> Self {
        Self::new(params.values().len(), cfg.beta1, cfg.beta2, cfg.eps)
    }
}

/// One Adam update in place. Rejects non-finite gradients before touching
/// any state.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &Grads,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    let n = params.values().len();
    if grads.layout() != params.layout() || state.m.len() != n || state.v.len() != n {
        return Err(Error::shape("optimizer state does not match parameters"));
    }
    if grads.values().iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient".into()));
    }
    state.step += 1;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(state.step as i32);
    let c2 = 1.0 - b2.powi(state.step as i32);
    let values = params.values_mut();
    let moments = state.m.iter_mut().zip(state.v.iter_mut());
    for ((x, &g), (m, v)) in values.iter_mut().zip(grads.values()).zip(moments) {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        *x -= lr * (*m / c1) / ((*v / c2).sqrt() + state.eps);
    }
    Ok(())
}
