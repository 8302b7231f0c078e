//! Hand-differentiated network: embedding → batch norm → BiLSTM(h1, dropout)
//! → BiLSTM(h2) → additive attention → concat(features) → softmax.
//!
//! Every layer exposes a forward function returning a cache and a backward
//! function consuming it. Nothing here allocates autograd graphs; gradients
//! are written out by hand and checked against central differences in tests.

mod attention;
mod batchnorm;
pub mod checkpoint;
mod embedding;
mod head;
mod init;
mod lstm;
mod model;
mod tensor;

use thiserror::Error;

pub use attention::{attention_backward, attention_forward, l2_penalty, l2_penalty_grad, AttentionCache, AttentionParams};
pub use batchnorm::{batchnorm_backward, batchnorm_forward, BatchNormCache, BatchStats, BN_EPS, BN_MOMENTUM};
pub use embedding::{embedding_backward, embedding_forward};
pub use head::{output_head, output_head_backward, weighted_crossentropy, HeadCache, PROB_FLOOR};
pub use init::{glorot_uniform, uniform};
pub use lstm::{
    bilstm_backward, bilstm_forward, dropout_mask, lstm_cell, lstm_cell_backward, BiLstmCache, BiLstmParams, CellCache,
    CellOutput, Dropout, LstmParams, OutputActivation,
};
pub use model::{batch_loss, loss_and_gradients, model_backward, model_forward, Batch, ForwardCache, ModelConfig, ModelState, Parameters};
pub use tensor::Tensor;

/// Seeded generator used for initialization and dropout.
pub type Rng = rand_chacha::ChaCha8Rng;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("token index {index} out of range for vocabulary of size {vocab}")]
    IndexOutOfRange { index: usize, vocab: usize },
    #[error("batch norm needs at least 2 positions in train mode, got {positions}")]
    DegenerateBatch { positions: usize },
    #[error("row {row} has no unmasked positions")]
    AllPositionsMasked { row: usize },
    #[error("forward cache does not match: {0}")]
    CacheMismatch(String),
    #[error("{what}: expected shape {expected:?}, found {found:?}")]
    ShapeMismatch { what: String, expected: Vec<usize>, found: Vec<usize> },
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}
