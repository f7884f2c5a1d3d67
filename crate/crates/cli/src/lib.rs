//! Experiment runner for insincere-question classification: `eda`, `train`,
//! `evaluate`, `predict` and `report`, all driven by one JSON config.

pub mod artifact;
pub mod config;
mod error;
pub mod pipeline;

pub use artifact::{ModelArtifact, ModelPayload, ARTIFACT_FORMAT_VERSION};
pub use config::{
    EmbeddingSpec, ExperimentConfig, Features, ModelConfig, NeuralHyper, ResampleConfig,
};
pub use error::CliError;
pub use pipeline::{run_eda, run_evaluate, run_predict, run_train, TrainOutcome};
