//! Bidirectional GRU/LSTM classifiers with hand-written backpropagation,
//! binary cross-entropy and Adam.

mod adam;
pub mod cell;
mod loss;
mod model;
mod tensor;
mod train;

use thiserror::Error;

pub use adam::{adam_update, AdamConfig, AdamState};
pub use cell::{gru_step, lstm_step, sigmoid, GateParams, GruParams, LstmParams, RecurrentParams};
pub use loss::{bce_loss, BCE_CLIP};
pub use model::{model_forward, Architecture, CellKind, Dense, Gradients, SequenceClassifier};
pub use tensor::Tensor;
pub use train::{accuracy_at, train, EpochRecord, TrainConfig, TrainHistory};

#[derive(Debug, Error, PartialEq)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("token id {id} out of range for an embedding with {rows} rows")]
    IdOutOfRange { id: usize, rows: usize },
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize },
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("empty training set")]
    Empty,
}
