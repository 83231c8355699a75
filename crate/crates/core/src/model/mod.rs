//! The completion scorer: `p(o | s, r) ∝ exp([e_s : e_r : h(s, r)] · w_o)`,
//! where `h(s, r)` mean-pools the embeddings of objects that `(s, r)` was
//! linked to in the preceding snapshots.

mod adam;
mod artifact;
mod history;
mod params;
mod scorer;

pub use adam::{adam_step, AdamState};
pub use artifact::{read_params, write_params};
pub use history::{history_vector, EventLog, History};
pub use params::{init_params, Grads, ModelParams, ParamLayout};
pub use scorer::{
    log_softmax, loss_and_grads, score, score_example, softmax, TrainingExample,
};
pub(crate) use artifact::{decode_layout, encode_layout};
pub(crate) use scorer::accumulate_example;

use crate::error::{Error, Result};

/// Model and optimizer hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    /// Embedding dimension `d`.
    pub dim: usize,
    /// History window in snapshots.
    pub history_window: usize,
    /// Learning rate on the first task.
    pub lr_first: f64,
    /// Learning rate on later tasks (strategies that decay it).
    pub lr_subsequent: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            history_window: 3,
            lr_first: 1e-3,
            lr_subsequent: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 256,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        if !(self.lr_first > 0.0 && self.lr_subsequent > 0.0) {
            return Err(Error::invalid("learning rates must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("Adam betas must lie in [0, 1)"));
        }
        if self.eps <= 0.0 {
            return Err(Error::invalid("Adam epsilon must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        Ok(())
    }
}
