//! Tokenization, cleaning, vocabularies and word-frequency analysis.

use std::collections::{BTreeSet, HashMap};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Bundled English stopword list, one token per line.
pub const STOPWORDS_EN: &str = include_str!("../data/stopwords_en.txt");

/// Unicode punctuation (general category P*) plus every printable ASCII symbol.
static PUNCT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[\p{P}!-/:-@\[-`{-~]").expect("valid punctuation class"));

pub fn default_stopwords() -> BTreeSet<String> {
    STOPWORDS_EN
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Cleaning switches applied by [`tokenize`], in field order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    pub remove_stopwords: bool,
    pub min_token_chars: usize,
    pub stopwords: BTreeSet<String>,
}

impl TokenizerConfig {
    /// All five cleaning steps with a four-character minimum; used for word-frequency analysis.
    pub fn eda() -> Self {
        TokenizerConfig {
            lowercase: true,
            strip_punctuation: true,
            remove_stopwords: true,
            min_token_chars: 4,
            stopwords: default_stopwords(),
        }
    }

    /// Lowercase and punctuation stripping only; keeps sentence structure for sequence models.
    pub fn model() -> Self {
        TokenizerConfig {
            lowercase: true,
            strip_punctuation: true,
            remove_stopwords: false,
            min_token_chars: 0,
            stopwords: BTreeSet::new(),
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "eda" => Some(Self::eda()),
            "model" => Some(Self::model()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub tokens: Vec<String>,
}

impl TokenizedDoc {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        TokenizedDoc {
            tokens: tokens.into_iter().map(Into::into).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn join(&self) -> String {
        self.tokens.join(" ")
    }
}

pub fn tokenize(text: &str, cfg: &TokenizerConfig) -> TokenizedDoc {
    let mut tokens = Vec::new();
    for raw in text.split_whitespace() {
        let mut tok = if cfg.lowercase {
            raw.to_lowercase()
        } else {
            raw.to_owned()
        };
        if cfg.strip_punctuation {
            if let std::borrow::Cow::Owned(s) = PUNCT.replace_all(&tok, "") {
                tok = s;
            }
            if tok.is_empty() {
                continue;
            }
        }
        if cfg.remove_stopwords && cfg.stopwords.contains(&tok) {
            continue;
        }
        if tok.chars().count() < cfg.min_token_chars {
            continue;
        }
        tokens.push(tok);
    }
    TokenizedDoc { tokens }
}

pub fn tokenize_all<'a>(
    texts: impl IntoIterator<Item = &'a str>,
    cfg: &TokenizerConfig,
) -> Vec<TokenizedDoc> {
    texts.into_iter().map(|t| tokenize(t, cfg)).collect()
}

pub const PAD_ID: usize = 0;
pub const OOV_ID: usize = 1;
pub const RESERVED: usize = 2;

/// Token-to-index map. Index 0 is padding, 1 is out-of-vocabulary, terms start at 2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabRepr", into = "VocabRepr")]
pub struct Vocab {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    max_features: Option<usize>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    max_features: Option<usize>,
}

impl From<VocabRepr> for Vocab {
    fn from(r: VocabRepr) -> Self {
        Vocab::from_parts(r.terms, r.doc_freq, r.max_features)
    }
}

impl From<Vocab> for VocabRepr {
    fn from(v: Vocab) -> Self {
        VocabRepr {
            terms: v.terms,
            doc_freq: v.doc_freq,
            max_features: v.max_features,
        }
    }
}

impl Vocab {
    pub fn from_parts(
        terms: Vec<String>,
        doc_freq: Vec<usize>,
        max_features: Option<usize>,
    ) -> Self {
        assert_eq!(
            terms.len(),
            doc_freq.len(),
            "one document frequency per term"
        );
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i + RESERVED))
            .collect();
        Vocab {
            terms,
            doc_freq,
            max_features,
            index,
        }
    }

    /// Number of real terms, excluding the two reserved indices.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Row count of an embedding matrix over this vocabulary.
    pub fn size_with_reserved(&self) -> usize {
        self.terms.len() + RESERVED
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Index of `token`, or [`OOV_ID`].
    pub fn id(&self, token: &str) -> usize {
        self.get(token).unwrap_or(OOV_ID)
    }

    /// Term at a vocabulary index (>= 2).
    pub fn term(&self, id: usize) -> Option<&str> {
        id.checked_sub(RESERVED)
            .and_then(|i| self.terms.get(i))
            .map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self, token: &str) -> Option<usize> {
        self.get(token).map(|i| self.doc_freq[i - RESERVED])
    }

    pub fn doc_freqs(&self) -> &[usize] {
        &self.doc_freq
    }

    pub fn max_features(&self) -> Option<usize> {
        self.max_features
    }

    /// SHA-256 over the terms in index order, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.terms {
            h.update(t.as_bytes());
            h.update([0u8]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn counts(docs: &[TokenizedDoc]) -> (HashMap<&str, usize>, HashMap<&str, usize>) {
    let mut total: HashMap<&str, usize> = HashMap::new();
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        let mut seen = std::collections::HashSet::new();
        for t in &doc.tokens {
            *total.entry(t.as_str()).or_default() += 1;
            if seen.insert(t.as_str()) {
                *df.entry(t.as_str()).or_default() += 1;
            }
        }
    }
    (total, df)
}

fn ranked<'a>(total: &HashMap<&'a str, usize>) -> Vec<(&'a str, usize)> {
    let mut v: Vec<(&str, usize)> = total.iter().map(|(&t, &c)| (t, c)).collect();
    v.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    v
}

/// Vocabulary of the `max_features` most frequent tokens (ties lexicographic).
pub fn build_vocab(docs: &[TokenizedDoc], max_features: Option<usize>) -> Vocab {
    let (total, df) = counts(docs);
    let mut ranked = ranked(&total);
    if let Some(cap) = max_features {
        ranked.truncate(cap);
    }
    let terms: Vec<String> = ranked.iter().map(|(t, _)| t.to_string()).collect();
    let doc_freq = ranked.iter().map(|(t, _)| df[t]).collect();
    Vocab::from_parts(terms, doc_freq, max_features)
}

/// Most frequent tokens, descending by count, ties lexicographic.
pub fn frequency_distribution(docs: &[TokenizedDoc], top_k: usize) -> Vec<(String, usize)> {
    let (total, _) = counts(docs);
    let mut r = ranked(&total);
    r.truncate(top_k);
    r.into_iter().map(|(t, c)| (t.to_owned(), c)).collect()
}
