//! From-scratch classifiers: fully connected, VGG-style 1-D CNN, LSTM and
//! BiLSTM, with exact backpropagation, Adam and plateau scheduling.

pub mod adam;
pub mod checkpoint;
pub mod encode;
pub mod flops;
pub mod layers;
pub mod loss;
pub mod lstm;
pub mod model;
pub mod params;
pub mod schedule;
pub mod train;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use flops::counted_logit;
pub use encode::{decode_fc, encode_batch, encode_input, encode_selected, Family, Tensor};
pub use loss::{bce_with_logits, mean_bce, sigmoid};
pub use model::{Forward, Grads, Mode, Model};
pub use params::{ModelParams, RunningStats};
pub use schedule::{Action, PlateauConfig, PlateauSchedule};
pub use train::{
    calibrate_on, history_csv, predict_logits, predict_scores, train, train_on, train_with_hook, EpochRecord,
    TrainConfig, TrainedModel,
};

use crate::costmodel::CostError;

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error(transparent)]
    InvalidArch(#[from] CostError),
    #[error("unsupported architecture: {0}")]
    Unsupported(String),
    #[error("input shape mismatch: expected [batch, {expected:?}], found {found:?}")]
    ShapeMismatch { expected: Vec<usize>, found: Vec<usize> },
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },
    #[error("empty split: {0}")]
    EmptySplit(&'static str),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Detect(#[from] crate::detect::DetectError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
