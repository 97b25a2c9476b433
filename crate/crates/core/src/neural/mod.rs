//! A small dense network kernel: 4-layer ReLU MLPs with cached forward
//! passes, reverse-mode gradients, softmax cross-entropy and Adam.
//!
//! Everything is `f64`. Batches are row-major: one sample per row.

mod adam;
mod loss;
mod mlp;

pub use adam::AdamState;
pub use loss::{softmax, softmax_cross_entropy};
pub use mlp::{DenseLayer, LayerRecord, Mlp, MlpCache, MlpRecord, MLP_DEPTH};
