//! Persisted model: everything `evaluate` and `predict` need to score raw text.

use std::path::Path;

use serde::{Deserialize, Serialize};
use toxic_core::linear::{NbModel, SvmModel};
use toxic_core::neural::SequenceClassifier;
use toxic_core::textprep::{tokenize, TokenizerConfig, Vocab};
use toxic_core::vectorize::{encode_sequences, TfidfModel};
use toxic_core::MetricsReport;

use crate::config::ExperimentConfig;
use crate::CliError;

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelPayload {
    Nb {
        tfidf: TfidfModel,
        model: NbModel,
    },
    Svm {
        tfidf: TfidfModel,
        model: SvmModel,
    },
    Sequence {
        maxlen: usize,
        model: SequenceClassifier,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    /// `nb`, `svm`, `gru` or `lstm`.
    pub kind: String,
    pub tokenizer: TokenizerConfig,
    pub vocab: Vocab,
    pub vocab_hash: String,
    pub config: ExperimentConfig,
    pub model: ModelPayload,
    /// Report from the training run's own evaluation.
    pub metrics: Option<MetricsReport>,
}

/// Positive-class scores and labels for a batch of texts.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub probability: Vec<f64>,
    pub label: Vec<bool>,
}

impl ModelArtifact {
    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string(self)
            .map_err(|e| CliError::Numeric(format!("serializing artifact: {e}")))?;
        std::fs::write(path, json).map_err(|e| CliError::io(path.display(), e))
    }

    /// Loads and checks the format version and vocabulary fingerprints.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let version = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64);
        if version != Some(ARTIFACT_FORMAT_VERSION as u64) {
            return Err(CliError::Data(format!(
                "{}: artifact format version {} is not supported (expected {ARTIFACT_FORMAT_VERSION})",
                path.display(),
                version.map_or("missing".to_string(), |v| v.to_string())
            )));
        }
        let artifact: ModelArtifact = serde_json::from_value(value)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        artifact.check_vocab()?;
        Ok(artifact)
    }

    /// Refuses artifacts whose stored vocabulary does not match the recorded hash
    /// or the vocabulary the model was fitted with.
    pub fn check_vocab(&self) -> Result<(), CliError> {
        let actual = self.vocab.fingerprint();
        if actual != self.vocab_hash {
            return Err(CliError::Data(format!(
                "vocabulary hash mismatch: artifact records {}, vocabulary hashes to {actual}",
                self.vocab_hash
            )));
        }
        let inner = match &self.model {
            ModelPayload::Nb { tfidf, .. } | ModelPayload::Svm { tfidf, .. } => {
                Some(tfidf.vocab().fingerprint())
            }
            ModelPayload::Sequence { model, .. } => {
                if model.embedding.rows() != self.vocab.size_with_reserved() {
                    return Err(CliError::Data(format!(
                        "embedding has {} rows but the vocabulary needs {}",
                        model.embedding.rows(),
                        self.vocab.size_with_reserved()
                    )));
                }
                None
            }
        };
        match inner {
            Some(h) if h != self.vocab_hash => Err(CliError::Data(format!(
                "vocabulary hash mismatch: model was fitted with {h}, artifact records {}",
                self.vocab_hash
            ))),
            _ => Ok(()),
        }
    }

    /// Scores raw texts. NB reports its normalized posterior; the SVM reports
    /// σ(decision), an uncalibrated squashing, and thresholds on the decision scale
    /// so that 0.5 matches its `decision ≥ 0` rule.
    pub fn score<'a>(
        &self,
        texts: impl IntoIterator<Item = &'a str>,
        threshold: f64,
    ) -> Result<Scores, CliError> {
        let docs: Vec<_> = texts
            .into_iter()
            .map(|t| tokenize(t, &self.tokenizer))
            .collect();
        let (probability, label): (Vec<f64>, Vec<bool>) = match &self.model {
            ModelPayload::Nb { tfidf, model } => docs
                .iter()
                .map(|d| {
                    let p = model.predict_proba(&tfidf.transform(d));
                    (p, p > threshold)
                })
                .unzip(),
            ModelPayload::Svm { tfidf, model } => {
                let cut = logit(threshold);
                docs.iter()
                    .map(|d| {
                        let s = model.decision(&tfidf.transform(d));
                        (toxic_core::neural::sigmoid(s), s >= cut)
                    })
                    .unzip()
            }
            ModelPayload::Sequence { maxlen, model } => {
                let batch = encode_sequences(&self.vocab, &docs, *maxlen);
                let p = model.forward(&batch)?;
                let l = p.iter().map(|&p| p > threshold).collect();
                (p, l)
            }
        };
        if let Some(i) = probability.iter().position(|p| !p.is_finite()) {
            return Err(CliError::Numeric(format!(
                "row {}: non-finite score",
                i + 1
            )));
        }
        Ok(Scores { probability, label })
    }
}

/// `ln(t / (1 − t))`, with ±∞ at the ends.
fn logit(t: f64) -> f64 {
    if t <= 0.0 {
        f64::NEG_INFINITY
    } else if t >= 1.0 {
        f64::INFINITY
    } else {
        (t / (1.0 - t)).ln()
    }
}
