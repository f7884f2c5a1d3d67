//! Experiment configuration: one JSON file describing a full run.
//!
//! ```json
//! {
//!   "data": "fixtures/questions_1k.csv",
//!   "split": { "train_fraction": 0.8, "seed": 42, "stratify": true },
//!   "tokenizer": "model",
//!   "features": "sequence",
//!   "embedding": "glove:fixtures/glove_fixture.txt",
//!   "resample": { "mode": "random", "seed": 7 },
//!   "model": { "kind": "gru", "hidden_dim": 64, "dense_dim": 64, "seed": 1 },
//!   "train": { "epochs": 5, "batch_size": 512 },
//!   "output_dir": "runs/gru-glove"
//! }
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use toxic_core::neural::{CellKind, TrainConfig};
use toxic_core::resample::ResampleMode;
use toxic_core::textprep::TokenizerConfig;
use toxic_core::vectorize::EmbeddingFormat;
use toxic_core::{SplitSpec, SvmHyper};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Features {
    Tfidf,
    Sequence,
}

impl FromStr for Features {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tfidf" => Ok(Features::Tfidf),
            "sequence" => Ok(Features::Sequence),
            other => Err(CliError::Config(format!(
                "unknown featurization {other:?} (tfidf, sequence)"
            ))),
        }
    }
}

/// `none`, `glove:PATH` or `fasttext:PATH`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EmbeddingSpec {
    #[default]
    None,
    Pretrained {
        format: EmbeddingFormat,
        path: PathBuf,
    },
}

impl FromStr for EmbeddingSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "none" {
            return Ok(EmbeddingSpec::None);
        }
        let bad = || {
            CliError::Config(format!(
                "embedding must be none, glove:PATH or fasttext:PATH, got {s:?}"
            ))
        };
        let (kind, path) = s.split_once(':').ok_or_else(bad)?;
        if path.is_empty() {
            return Err(bad());
        }
        let format = kind.parse::<EmbeddingFormat>().map_err(|_| bad())?;
        Ok(EmbeddingSpec::Pretrained {
            format,
            path: PathBuf::from(path),
        })
    }
}

impl fmt::Display for EmbeddingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbeddingSpec::None => f.write_str("none"),
            EmbeddingSpec::Pretrained { format, path } => write!(f, "{format}:{}", path.display()),
        }
    }
}

impl TryFrom<String> for EmbeddingSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse().map_err(|e: CliError| e.to_string())
    }
}

impl From<EmbeddingSpec> for String {
    fn from(e: EmbeddingSpec) -> Self {
        e.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResampleConfig {
    pub mode: ResampleMode,
    pub seed: u64,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        ResampleConfig {
            mode: ResampleMode::None,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NeuralHyper {
    /// Width of a scratch embedding; pretrained vectors bring their own.
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub dense_dim: usize,
    /// Keep updating pretrained vectors during training. Scratch embeddings always train.
    pub fine_tune_embedding: bool,
    /// Seeds weight and embedding initialization.
    pub seed: u64,
}

impl Default for NeuralHyper {
    fn default() -> Self {
        NeuralHyper {
            embedding_dim: 64,
            hidden_dim: 64,
            dense_dim: 64,
            fine_tune_embedding: false,
            seed: 1,
        }
    }
}

fn default_alpha() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Nb {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    Svm(SvmHyper),
    Gru(NeuralHyper),
    Lstm(NeuralHyper),
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Nb { .. } => "nb",
            ModelConfig::Svm(_) => "svm",
            ModelConfig::Gru(_) => "gru",
            ModelConfig::Lstm(_) => "lstm",
        }
    }

    /// Default hyperparameters for `nb`, `svm`, `gru` or `lstm`.
    pub fn by_name(name: &str) -> Result<Self, CliError> {
        match name {
            "nb" => Ok(ModelConfig::Nb { alpha: 1.0 }),
            "svm" => Ok(ModelConfig::Svm(SvmHyper::default())),
            "gru" => Ok(ModelConfig::Gru(NeuralHyper::default())),
            "lstm" => Ok(ModelConfig::Lstm(NeuralHyper::default())),
            other => Err(CliError::Config(format!(
                "unknown model {other:?} (nb, svm, gru, lstm)"
            ))),
        }
    }

    pub fn natural_features(&self) -> Features {
        match self {
            ModelConfig::Nb { .. } | ModelConfig::Svm(_) => Features::Tfidf,
            _ => Features::Sequence,
        }
    }

    pub fn cell(&self) -> Option<CellKind> {
        match self {
            ModelConfig::Gru(_) => Some(CellKind::Gru),
            ModelConfig::Lstm(_) => Some(CellKind::Lstm),
            _ => None,
        }
    }

    pub fn neural(&self) -> Option<&NeuralHyper> {
        match self {
            ModelConfig::Gru(h) | ModelConfig::Lstm(h) => Some(h),
            _ => None,
        }
    }
}

fn default_max_features() -> Option<usize> {
    Some(50_000)
}

fn default_maxlen() -> usize {
    70
}

fn default_tokenizer() -> String {
    "model".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: PathBuf,
    #[serde(default)]
    pub split: SplitSpec,
    /// `model` (lowercase + strip punctuation) or `eda` (also stopwords and a
    /// four-character minimum).
    #[serde(default = "default_tokenizer")]
    pub tokenizer: String,
    pub features: Features,
    #[serde(default)]
    pub embedding: EmbeddingSpec,
    #[serde(default)]
    pub resample: ResampleConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    /// Vocabulary cap; `null` keeps every term.
    #[serde(default = "default_max_features")]
    pub max_features: Option<usize>,
    #[serde(default = "default_maxlen")]
    pub maxlen: usize,
    /// Score on a class-balanced copy of the test split instead of its natural ratio.
    #[serde(default)]
    pub eval_on_resampled: bool,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Defaults for `model` with its natural featurization.
    pub fn new(
        data: impl Into<PathBuf>,
        model: ModelConfig,
        output_dir: impl Into<PathBuf>,
    ) -> Self {
        ExperimentConfig {
            data: data.into(),
            split: SplitSpec::default(),
            tokenizer: default_tokenizer(),
            features: model.natural_features(),
            embedding: EmbeddingSpec::None,
            resample: ResampleConfig::default(),
            model,
            train: TrainConfig::default(),
            max_features: default_max_features(),
            maxlen: default_maxlen(),
            eval_on_resampled: false,
            output_dir: output_dir.into(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self, CliError> {
        serde_json::from_str(s).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn tokenizer_config(&self) -> Result<TokenizerConfig, CliError> {
        TokenizerConfig::by_name(&self.tokenizer).ok_or_else(|| {
            CliError::Config(format!(
                "unknown tokenizer {:?} (model, eda)",
                self.tokenizer
            ))
        })
    }

    /// Checks every cross-field rule; runs before any data is read.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.data.as_os_str().is_empty() {
            return bad("no data path given".into());
        }
        if self.output_dir.as_os_str().is_empty() {
            return bad("no output directory given".into());
        }
        self.split
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.tokenizer_config()?;
        let model = self.model.name();
        match (self.features, &self.model) {
            (Features::Tfidf, ModelConfig::Gru(_) | ModelConfig::Lstm(_)) => {
                return bad(format!("{model} needs sequence features, not tfidf"));
            }
            (Features::Sequence, ModelConfig::Nb { .. } | ModelConfig::Svm(_)) => {
                return bad(format!("{model} needs tfidf features, not sequence"));
            }
            _ => {}
        }
        if self.features == Features::Tfidf && self.embedding != EmbeddingSpec::None {
            return bad(format!(
                "embeddings apply only to sequence models, not {model}"
            ));
        }
        if self.features == Features::Sequence && self.resample.mode == ResampleMode::CentroidsSoft
        {
            return bad("centroids-soft creates synthetic feature rows, which have no token sequence; use centroids-hard for sequence models".into());
        }
        if self.eval_on_resampled && self.resample.mode == ResampleMode::None {
            return bad("eval_on_resampled needs a resample mode other than none".into());
        }
        if self.max_features == Some(0) {
            return bad("max_features must be >= 1".into());
        }
        match &self.model {
            ModelConfig::Nb { alpha } if !(*alpha >= 0.0 && alpha.is_finite()) => {
                return bad(format!("alpha must be >= 0, got {alpha}"));
            }
            ModelConfig::Svm(h) if !(h.lambda > 0.0 && h.lambda.is_finite()) || h.epochs == 0 => {
                return bad("svm needs lambda > 0 and epochs >= 1".into());
            }
            ModelConfig::Gru(h) | ModelConfig::Lstm(h) => {
                if h.embedding_dim == 0 || h.hidden_dim == 0 || h.dense_dim == 0 {
                    return bad("neural layer sizes must be >= 1".into());
                }
                if self.maxlen == 0 {
                    return bad("maxlen must be >= 1".into());
                }
                self.train
                    .validate()
                    .map_err(|e| CliError::Config(e.to_string()))?;
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.train.threshold) {
            return bad("threshold must lie in [0, 1]".into());
        }
        Ok(())
    }
}
