//! Minimal neural-network engine: layers with explicit forward/backward
//! passes, cross-entropy, plain gradient descent and `MDCK` checkpoints.
//!
//! Everything runs on single samples in `f64`; batches are loops that sum
//! per-sample gradients in a fixed order, so training is bit-reproducible.

pub mod checkpoint;
pub mod layers;
pub mod loss;
pub mod network;
pub mod tensor;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use layers::{sigmoid, softmax, Conv2d, Dense, Layer, MultiScaleConv, Param, Rbf};
pub use loss::{cross_entropy, one_hot, safe_ln, LOG_FLOOR};
pub use network::{sgd_step, Activations, Gradients, Network};
pub use tensor::Tensor;

/// Hyperparameters of plain mini-batch gradient descent.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.0005,
            epochs: 500,
            batch_size: 64,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.learning_rate > 0.0) || self.epochs == 0 || self.batch_size == 0 {
            return Err(crate::Error::InvalidConfig(
                "training needs learning rate > 0, epochs >= 1 and batch size >= 1".into(),
            ));
        }
        Ok(())
    }
}
