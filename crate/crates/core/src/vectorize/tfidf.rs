use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::SparseVector;
use crate::textprep::{TokenizedDoc, Vocab, RESERVED};

pub const TFIDF_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TfidfError {
    #[error("cannot fit TF-IDF on an empty corpus")]
    EmptyCorpus,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported TF-IDF model version {0}")]
    Version(u32),
}

/// Smoothed-idf TF-IDF weights over a vocabulary.
///
/// Feature `j` of a transformed vector corresponds to vocabulary index `j + 2`.
/// `idf(t) = ln((1 + n_docs) / (1 + df(t))) + 1`, raw term counts, L2 normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    version: u32,
    vocab: Vocab,
    idf: Vec<f64>,
    n_docs: usize,
}

pub fn fit_tfidf(docs: &[TokenizedDoc], vocab: &Vocab) -> Result<TfidfModel, TfidfError> {
    if docs.is_empty() {
        return Err(TfidfError::EmptyCorpus);
    }
    let mut df = vec![0usize; vocab.len()];
    for doc in docs {
        let uniq: HashSet<usize> = doc.tokens.iter().filter_map(|t| vocab.get(t)).collect();
        for id in uniq {
            df[id - RESERVED] += 1;
        }
    }
    let n = docs.len() as f64;
    let idf = df
        .iter()
        .map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
        .collect();
    Ok(TfidfModel {
        version: TFIDF_FORMAT_VERSION,
        vocab: vocab.clone(),
        idf,
        n_docs: docs.len(),
    })
}

impl TfidfModel {
    pub fn dim(&self) -> usize {
        self.idf.len()
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn idf_of(&self, token: &str) -> Option<f64> {
        self.vocab.get(token).map(|id| self.idf[id - RESERVED])
    }

    /// L2-normalized TF-IDF vector; out-of-vocabulary tokens are ignored.
    pub fn transform(&self, doc: &TokenizedDoc) -> SparseVector {
        let mut tf: BTreeMap<usize, u32> = BTreeMap::new();
        for t in &doc.tokens {
            if let Some(id) = self.vocab.get(t) {
                *tf.entry(id - RESERVED).or_default() += 1;
            }
        }
        let pairs = tf
            .into_iter()
            .map(|(j, c)| (j, c as f64 * self.idf[j]))
            .collect();
        SparseVector::from_pairs(self.dim(), pairs).l2_normalized()
    }

    pub fn transform_all(&self, docs: &[TokenizedDoc]) -> Vec<SparseVector> {
        docs.iter().map(|d| self.transform(d)).collect()
    }

    pub fn to_json(&self) -> Result<String, TfidfError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, TfidfError> {
        let m: TfidfModel = serde_json::from_str(s)?;
        if m.version != TFIDF_FORMAT_VERSION {
            return Err(TfidfError::Version(m.version));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TfidfError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TfidfError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
