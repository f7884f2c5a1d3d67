//! Building blocks for insincere-question classification.
//!
//! The pipeline is: [`corpus`] ingestion and splitting, [`textprep`] cleaning and
//! vocabularies, [`vectorize`] (TF-IDF, padded id sequences, pretrained embeddings),
//! [`resample`] for class balancing, the [`linear`] and [`neural`] classifier
//! families, and [`eval`] for confusion matrices and metric reports.
//!
//! Every randomized step takes an explicit `u64` seed and draws from [`rng::seeded`],
//! so identical inputs and seeds give identical outputs on every platform.

pub mod corpus;
pub mod eval;
pub mod linear;
pub mod neural;
pub mod resample;
pub mod rng;
pub mod textprep;
pub mod vectorize;

pub use corpus::{Dataset, Example, SplitSpec};
pub use eval::{ConfusionMatrix, MetricsReport};
pub use linear::{NbModel, SvmHyper, SvmModel};
pub use neural::{CellKind, SequenceClassifier, TrainConfig, TrainHistory};
pub use textprep::{TokenizedDoc, TokenizerConfig, Vocab};
pub use vectorize::{EmbeddingTable, SequenceBatch, SparseVector, TfidfModel};
