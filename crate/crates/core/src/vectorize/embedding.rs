//! Pretrained word-vector files and embedding-matrix construction.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::neural::Tensor;
use crate::rng;
use crate::textprep::{Vocab, RESERVED};

/// Standard deviation of rows in an embedding learned from scratch.
pub const SCRATCH_INIT_STD: f64 = 0.1;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("embedding file is empty")]
    Empty,
    #[error("line {line}: bad header {found:?}, expected `<count> <dim>`")]
    Header { line: usize, found: String },
    #[error("line {line}: expected {expected} components, found {found}")]
    Dimension {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: cannot parse {token:?} as a float")]
    Float { line: usize, token: String },
    #[error("unknown embedding format {0:?} (expected glove or fasttext)")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingFormat {
    /// `word v1 .. vd` per line, no header.
    Glove,
    /// `count dim` header line, then the glove layout.
    Fasttext,
}

impl FromStr for EmbeddingFormat {
    type Err = EmbeddingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "glove" => Ok(EmbeddingFormat::Glove),
            "fasttext" => Ok(EmbeddingFormat::Fasttext),
            other => Err(EmbeddingError::Format(other.to_owned())),
        }
    }
}

impl fmt::Display for EmbeddingFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmbeddingFormat::Glove => "glove",
            EmbeddingFormat::Fasttext => "fasttext",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
    value_mean: f64,
    value_std: f64,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// Exact match first, then the lowercased word.
    pub fn lookup(&self, word: &str) -> Option<&[f64]> {
        self.get(word).or_else(|| {
            let lower = word.to_lowercase();
            if lower != word {
                self.get(&lower)
            } else {
                None
            }
        })
    }

    /// Mean of every component of every first-occurrence row in the file.
    pub fn value_mean(&self) -> f64 {
        self.value_mean
    }

    /// Population standard deviation matching [`Self::value_mean`].
    pub fn value_std(&self) -> f64 {
        self.value_std
    }
}

pub fn load_embeddings(
    path: impl AsRef<Path>,
    format: EmbeddingFormat,
) -> Result<EmbeddingTable, EmbeddingError> {
    read_embeddings(std::fs::File::open(path)?, format, |_| true)
}

/// Parses an embedding file, storing only rows whose word passes `keep`.
///
/// Every well-formed first-occurrence row contributes to the mean/std
/// statistics whether or not it is kept, so the statistics do not depend on
/// the filter.
pub fn read_embeddings<R: Read>(
    reader: R,
    format: EmbeddingFormat,
    keep: impl Fn(&str) -> bool,
) -> Result<EmbeddingTable, EmbeddingError> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let mut dim: Option<usize> = None;

    if format == EmbeddingFormat::Fasttext {
        let (_, header) = lines.next().ok_or(EmbeddingError::Empty)?;
        let header = header?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let parsed = match fields.as_slice() {
            [count, d] => count.parse::<usize>().ok().and(d.parse::<usize>().ok()),
            _ => None,
        };
        match parsed {
            Some(d) if d > 0 => dim = Some(d),
            _ => {
                return Err(EmbeddingError::Header {
                    line: 1,
                    found: header,
                })
            }
        }
    }

    let mut vectors: HashMap<String, Vec<f64>> = HashMap::new();
    let mut seen_words = std::collections::HashSet::new();
    // Welford accumulators over all components
    let (mut count, mut mean, mut m2) = (0u64, 0.0f64, 0.0f64);
    let mut any_row = false;

    for (i, line) in lines {
        let line = line?;
        let lineno = i + 1;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else {
            continue;
        };
        let values: Vec<&str> = fields.collect();
        let d = *dim.get_or_insert(values.len());
        if values.len() != d || d == 0 {
            return Err(EmbeddingError::Dimension {
                line: lineno,
                expected: d,
                found: values.len(),
            });
        }
        let mut vec = Vec::with_capacity(d);
        for tok in values {
            let v: f64 = tok.parse().map_err(|_| EmbeddingError::Float {
                line: lineno,
                token: tok.to_owned(),
            })?;
            if !v.is_finite() {
                return Err(EmbeddingError::Float {
                    line: lineno,
                    token: tok.to_owned(),
                });
            }
            vec.push(v);
        }
        any_row = true;
        if !seen_words.insert(word.to_owned()) {
            continue;
        }
        for &v in &vec {
            count += 1;
            let delta = v - mean;
            mean += delta / count as f64;
            m2 += delta * (v - mean);
        }
        if keep(word) {
            vectors.insert(word.to_owned(), vec);
        }
    }

    if !any_row {
        return Err(EmbeddingError::Empty);
    }
    Ok(EmbeddingTable {
        dim: dim.unwrap_or(0),
        vectors,
        value_mean: mean,
        value_std: if count > 0 {
            (m2 / count as f64).sqrt()
        } else {
            0.0
        },
    })
}

/// `(|vocab| + 2) × dim` matrix seeded from a pretrained table.
///
/// Row 0 (padding) is zero. Words found by [`EmbeddingTable::lookup`] copy their
/// vector; the OOV row and unmatched words are drawn from
/// `Normal(value_mean, value_std)`, in index order, from `seed`.
pub fn build_embedding_matrix(vocab: &Vocab, table: &EmbeddingTable, seed: u64) -> Tensor {
    let dim = table.dim();
    let rows = vocab.size_with_reserved();
    let mut m = Tensor::zeros(&[rows, dim]);
    let normal = Normal::new(table.value_mean(), table.value_std()).expect("finite statistics");
    let mut r = rng::seeded(seed);
    for id in 1..rows {
        let known = if id >= RESERVED {
            vocab.term(id).and_then(|t| table.lookup(t))
        } else {
            None
        };
        let row = m.row_mut(id);
        match known {
            Some(v) => row.copy_from_slice(v),
            None => row.iter_mut().for_each(|x| *x = normal.sample(&mut r)),
        }
    }
    m
}

/// Embedding for the no-pretrained regime: every non-padding row from `Normal(0, 0.1)`.
pub fn random_embedding_matrix(vocab: &Vocab, dim: usize, seed: u64) -> Tensor {
    random_embedding_rows(vocab.size_with_reserved(), dim, seed)
}

/// `rows × dim` matrix with row 0 zero and every other entry drawn from
/// `Normal(0, SCRATCH_INIT_STD)`.
pub fn random_embedding_rows(rows: usize, dim: usize, seed: u64) -> Tensor {
    let mut m = Tensor::zeros(&[rows, dim]);
    let normal = Normal::new(0.0, SCRATCH_INIT_STD).expect("valid normal");
    let mut r = rng::seeded(seed);
    for id in 1..rows {
        m.row_mut(id)
            .iter_mut()
            .for_each(|x| *x = normal.sample(&mut r));
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::{build_vocab, TokenizedDoc};

    const GLOVE: &str = "the 0.1 0.2 0.3\ncat 0.4 0.5 0.6\n";
    const FASTTEXT: &str = "2 3\nthe 0.1 0.2 0.3\ncat 0.4 0.5 0.6\n";

    fn glove() -> EmbeddingTable {
        read_embeddings(GLOVE.as_bytes(), EmbeddingFormat::Glove, |_| true).unwrap()
    }

    #[test]
    fn glove_fixture() {
        let t = glove();
        assert_eq!(t.len(), 2);
        assert_eq!(t.dim(), 3);
        assert!((t.value_mean() - 0.35).abs() < 1e-12);
        let expected_var = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6]
            .iter()
            .map(|v: &f64| (v - 0.35).powi(2))
            .sum::<f64>()
            / 6.0;
        assert!((t.value_std() - expected_var.sqrt()).abs() < 1e-12);
        assert_eq!(t.get("cat"), Some(&[0.4, 0.5, 0.6][..]));
    }

    #[test]
    fn fasttext_matches_glove() {
        let f = read_embeddings(FASTTEXT.as_bytes(), EmbeddingFormat::Fasttext, |_| true).unwrap();
        assert_eq!(f, glove());
    }

    #[test]
    fn empty_file_errors() {
        assert!(matches!(
            read_embeddings("".as_bytes(), EmbeddingFormat::Glove, |_| true),
            Err(EmbeddingError::Empty)
        ));
        assert!(matches!(
            read_embeddings("".as_bytes(), EmbeddingFormat::Fasttext, |_| true),
            Err(EmbeddingError::Empty)
        ));
    }

    #[test]
    fn inconsistent_dimension_reports_line() {
        let err = read_embeddings(
            "a 1 2\nb 1 2 3\n".as_bytes(),
            EmbeddingFormat::Glove,
            |_| true,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            EmbeddingError::Dimension {
                line: 2,
                expected: 2,
                found: 3
            }
        ));
        let err = read_embeddings("2 3\na 1 2\n".as_bytes(), EmbeddingFormat::Fasttext, |_| {
            true
        })
        .unwrap_err();
        assert!(matches!(err, EmbeddingError::Dimension { line: 2, .. }));
    }

    #[test]
    fn bad_float_and_bad_header() {
        let err =
            read_embeddings("a 1 x\n".as_bytes(), EmbeddingFormat::Glove, |_| true).unwrap_err();
        assert!(matches!(err, EmbeddingError::Float { line: 1, .. }));
        let err =
            read_embeddings("a 1 2\n".as_bytes(), EmbeddingFormat::Fasttext, |_| true).unwrap_err();
        assert!(matches!(err, EmbeddingError::Header { line: 1, .. }));
    }

    #[test]
    fn duplicates_keep_first() {
        let t = read_embeddings("a 1\na 2\n".as_bytes(), EmbeddingFormat::Glove, |_| true).unwrap();
        assert_eq!(t.get("a"), Some(&[1.0][..]));
        assert_eq!(t.value_mean(), 1.0);
    }

    #[test]
    fn filter_keeps_stats() {
        let t = read_embeddings(GLOVE.as_bytes(), EmbeddingFormat::Glove, |w| w == "cat").unwrap();
        assert_eq!(t.len(), 1);
        assert!((t.value_mean() - 0.35).abs() < 1e-12);
    }

    fn vocab(words: &[&str]) -> Vocab {
        build_vocab(&[TokenizedDoc::new(words.iter().copied())], None)
    }

    #[test]
    fn matrix_copies_known_rows() {
        let v = vocab(&["cat", "zebra"]);
        let m = build_embedding_matrix(&v, &glove(), 5);
        assert_eq!(m.shape(), &[4, 3]);
        assert_eq!(m.row(0), &[0.0, 0.0, 0.0]);
        assert_eq!(m.row(v.get("cat").unwrap()), &[0.4, 0.5, 0.6]);
        assert!(m.row(v.get("zebra").unwrap()).iter().all(|x| *x != 0.0));
        assert_eq!(m, build_embedding_matrix(&v, &glove(), 5));
        assert_ne!(m, build_embedding_matrix(&v, &glove(), 6));
    }

    #[test]
    fn matrix_lookup_falls_back_to_lowercase() {
        let cased = Vocab::from_parts(vec!["Cat".into()], vec![1], None);
        let m = build_embedding_matrix(&cased, &glove(), 0);
        assert_eq!(m.row(2), &[0.4, 0.5, 0.6]);
    }

    #[test]
    fn scratch_matrix() {
        let v = vocab(&["a", "b"]);
        let m = random_embedding_matrix(&v, 64, 1);
        assert_eq!(m.shape(), &[4, 64]);
        assert!(m.row(0).iter().all(|x| *x == 0.0));
        let rest = &m.data()[64..];
        let mean = rest.iter().sum::<f64>() / rest.len() as f64;
        let std = (rest.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / rest.len() as f64).sqrt();
        assert!(
            mean.abs() < 0.03 && (std - 0.1).abs() < 0.03,
            "{mean} {std}"
        );
    }
}
