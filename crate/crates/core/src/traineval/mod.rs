//! Training loop, optimizer, data splitting and evaluation metrics.

mod adam;
mod history;
mod labels;
mod metrics;
mod split;
mod trainer;

use thiserror::Error;

use crate::encode::EncodeError;
use crate::neural::NeuralError;

pub use adam::{adam_step, AdamConfig, AdamState, DEFAULT_LR};
pub use history::{early_stop, stop_on_rises, EpochRecord, TrainHistory, HISTORY_HEADER};
pub use labels::Label;
pub use metrics::{argmax, ClassMetrics, ConfusionMatrix, GroupedReport, MetricsReport};
pub use split::{class_weights, stratified_split, DEFAULT_RATIO};
pub use trainer::{
    sub_rng, train, ClassWeighting, Example, Prediction, SeedStream, TrainConfig, TrainOutcome, TrainedModel, DEFAULT_BATCH_SIZE,
    DEFAULT_MAX_EPOCHS,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("class {label} has only {count} instance; the split needs at least 2")]
    ClassTooSmall { label: usize, count: usize },
    #[error("class {class} has zero count")]
    ZeroCount { class: usize },
    #[error("non-finite gradient for {0}")]
    NonfiniteGradient(String),
    #[error("{0}")]
    ShapeMismatch(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("record {id:?} has no label")]
    Unlabeled { id: String },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}
