//! A minimal, exactly-differentiated neural engine in f64.
//!
//! Networks are dense stacks of linear layers with rectified-linear hidden
//! activations and an identity output. Gradients are hand-written
//! reverse-mode and are validated against central finite differences in the
//! test suite, which is what lets the training algorithms built on top make
//! precise claims. There is no autodiff tape: each loss that needs a
//! gradient computes it analytically from a cached forward pass.
//!
//! The pieces: [`DenseNet`] with [`Gradients`] and flat parameter access,
//! [`AdamW`] (adaptive moments with decoupled weight decay),
//! [`GaussianPolicy`] (tanh-squashed diagonal Gaussian over a bounded action
//! box), [`TwinCritic`] (two independent Q networks with Polyak-averaged
//! target copies), and a bit-exact binary [`Checkpoint`] format.

mod adamw;
mod checkpoint;
mod critic;
mod dense;
mod policy;

pub use adamw::{AdamW, AdamWConfig};
pub use checkpoint::{Checkpoint, NamedTensor};
pub use critic::{concat_columns, TwinCritic};
pub use dense::{mse_loss_grad, DenseNet, ForwardCache, Gradients, LayerGrad, LinearLayer};
pub use policy::{gaussian_log_pdf, GaussianPolicy, LOG_STD_MAX, LOG_STD_MIN};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("{what}: expected {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("action coordinate {dim} is on or outside the box boundary (value {value}); density undefined")]
    ActionOutsideBox { dim: usize, value: f64 },
    #[error("non-finite gradient in layer {layer} tensor {tensor} at flat index {index}")]
    NonFiniteGradient {
        layer: usize,
        tensor: &'static str,
        index: usize,
    },
    #[error("checkpoint format error: {0}")]
    Checkpoint(String),
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
}
