//! Labeled question corpus: CSV ingestion, class statistics and seeded splits.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

pub const HEADER: [&str; 3] = ["qid", "question_text", "target"];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad header: expected column {expected:?} at position {position}, found {found:?}")]
    Header {
        position: usize,
        expected: &'static str,
        found: Option<String>,
    },
    #[error("line {line}: target must be 0 or 1, found {found:?}")]
    Label { line: u64, found: String },
    #[error("line {line}: empty qid")]
    EmptyQid { line: u64 },
    #[error("line {line}: duplicate qid {qid:?}")]
    DuplicateQid { line: u64, qid: String },
    #[error("line {line}: expected 3 fields, found {found}")]
    FieldCount { line: u64, found: usize },
    #[error("invalid split fraction {0}; must lie strictly between 0 and 1")]
    Fraction(f64),
    #[error("cannot split {n} examples with train fraction {fraction} into two non-empty parts")]
    TooSmall { n: usize, fraction: f64 },
}

/// Binary class of a question. `Insincere` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Label {
    Sincere,
    Insincere,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Sincere => 0,
            Label::Insincere => 1,
        }
    }

    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Label::Insincere
        } else {
            Label::Sincere
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Insincere
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l.as_u8()
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(Label::Sincere),
            1 => Ok(Label::Insincere),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub qid: String,
    pub text: String,
    pub label: Label,
}

/// Ordered collection of examples with unique qids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    examples: Vec<Example>,
    n_positive: usize,
}

impl Dataset {
    /// Builds a dataset, rejecting empty or duplicate qids.
    pub fn new(examples: Vec<Example>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(examples.len());
        for (i, ex) in examples.iter().enumerate() {
            // line numbers are 1-based and count the header
            let line = i as u64 + 2;
            if ex.qid.is_empty() {
                return Err(CorpusError::EmptyQid { line });
            }
            if !seen.insert(ex.qid.as_str()) {
                return Err(CorpusError::DuplicateQid {
                    line,
                    qid: ex.qid.clone(),
                });
            }
        }
        Ok(Self::from_unique(examples))
    }

    fn from_unique(examples: Vec<Example>) -> Self {
        let n_positive = examples.iter().filter(|e| e.label.is_positive()).count();
        Dataset {
            examples,
            n_positive,
        }
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn n_positive(&self) -> usize {
        self.n_positive
    }

    pub fn n_negative(&self) -> usize {
        self.examples.len() - self.n_positive
    }

    pub fn labels(&self) -> Vec<Label> {
        self.examples.iter().map(|e| e.label).collect()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.examples.iter().map(|e| e.text.as_str())
    }

    /// Sub-dataset holding the examples at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset::from_unique(indices.iter().map(|&i| self.examples[i].clone()).collect())
    }

    pub fn class_distribution(&self) -> ClassDistribution {
        class_distribution(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub n_negative: usize,
    pub n_positive: usize,
    pub positive_fraction: f64,
}

/// Class counts and the positive fraction; an empty dataset has fraction 0.
pub fn class_distribution(d: &Dataset) -> ClassDistribution {
    let n = d.len();
    ClassDistribution {
        n_negative: d.n_negative(),
        n_positive: d.n_positive(),
        positive_fraction: if n == 0 {
            0.0
        } else {
            d.n_positive() as f64 / n as f64
        },
    }
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset, CorpusError> {
    let file = std::fs::File::open(path)?;
    read_csv(file)
}

/// Parses `qid,question_text,target` CSV. Any malformed row fails the whole load.
pub fn read_csv<R: Read>(reader: R) -> Result<Dataset, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let header = rdr.headers()?.clone();
    for (position, expected) in HEADER.iter().enumerate() {
        let found = header.get(position);
        if found.map(|f| f.trim_start_matches('\u{feff}')) != Some(*expected) {
            return Err(CorpusError::Header {
                position,
                expected,
                found: found.map(str::to_owned),
            });
        }
    }
    if header.len() > HEADER.len() {
        return Err(CorpusError::Header {
            position: HEADER.len(),
            expected: "<end of header>",
            found: header.get(HEADER.len()).map(str::to_owned),
        });
    }

    let mut examples = Vec::new();
    let mut seen = HashSet::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 3 {
            return Err(CorpusError::FieldCount {
                line,
                found: record.len(),
            });
        }
        let qid = &record[0];
        if qid.is_empty() {
            return Err(CorpusError::EmptyQid { line });
        }
        let label = match &record[2] {
            "0" => Label::Sincere,
            "1" => Label::Insincere,
            other => {
                return Err(CorpusError::Label {
                    line,
                    found: other.to_owned(),
                })
            }
        };
        if !seen.insert(qid.to_owned()) {
            return Err(CorpusError::DuplicateQid {
                line,
                qid: qid.to_owned(),
            });
        }
        examples.push(Example {
            qid: qid.to_owned(),
            text: record[1].to_owned(),
            label,
        });
    }
    Ok(Dataset::from_unique(examples))
}

pub fn save_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let file = std::fs::File::create(path)?;
    write_csv(d, file)
}

pub fn write_csv<W: Write>(d: &Dataset, writer: W) -> Result<(), CorpusError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(HEADER)?;
    for ex in &d.examples {
        wtr.write_record([
            ex.qid.as_str(),
            ex.text.as_str(),
            if ex.label.is_positive() { "1" } else { "0" },
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Train fraction and seed for [`train_test_split`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratify: bool,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self, CorpusError> {
        let spec = SplitSpec {
            train_fraction,
            seed,
            stratify: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn stratified(mut self, on: bool) -> Self {
        self.stratify = on;
        self
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.train_fraction > 0.0 && self.train_fraction < 1.0 {
            Ok(())
        } else {
            Err(CorpusError::Fraction(self.train_fraction))
        }
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 42,
            stratify: false,
        }
    }
}

/// Index-level result of a split; both index lists are in dataset order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded split into train and test parts.
///
/// Unstratified: `|train| = round(fraction * n)` drawn uniformly. Stratified: the
/// same rule is applied within each class, so `|train|` can differ from the
/// unstratified size by one per class.
pub fn split_indices(d: &Dataset, spec: &SplitSpec) -> Result<SplitIndices, CorpusError> {
    spec.validate()?;
    let n = d.len();
    let too_small = CorpusError::TooSmall {
        n,
        fraction: spec.train_fraction,
    };
    if n < 2 {
        return Err(too_small);
    }
    let mut r = rng::seeded(spec.seed);
    let mut is_train = vec![false; n];

    let groups: Vec<Vec<usize>> = if spec.stratify {
        let (pos, neg): (Vec<usize>, Vec<usize>) =
            (0..n).partition(|&i| d.examples[i].label.is_positive());
        vec![neg, pos]
    } else {
        vec![(0..n).collect()]
    };
    for mut group in groups {
        let take = (spec.train_fraction * group.len() as f64).round() as usize;
        rng::shuffle(&mut group, &mut r);
        for &i in &group[..take] {
            is_train[i] = true;
        }
    }

    let (train, test): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| is_train[i]);
    if train.is_empty() || test.is_empty() {
        return Err(too_small);
    }
    Ok(SplitIndices { train, test })
}

pub fn train_test_split(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset), CorpusError> {
    let idx = split_indices(d, spec)?;
    Ok((d.select(&idx.train), d.select(&idx.test)))
}

/// Writes `qid<TAB>train|test` lines in dataset order.
pub fn write_split_manifest<W: Write>(
    d: &Dataset,
    split: &SplitIndices,
    mut out: W,
) -> std::io::Result<()> {
    let mut part = vec![""; d.len()];
    for &i in &split.train {
        part[i] = "train";
    }
    for &i in &split.test {
        part[i] = "test";
    }
    for (ex, p) in d.examples.iter().zip(part) {
        writeln!(out, "{}\t{}", ex.qid, p)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> &'static str {
        "qid,question_text,target\n\
         a1,How do I learn Rust?,0\n\
         a2,\"Why are people, like, so crazy?\",1\n\
         a3,\"What is a \"\"monad\"\"?\",0\n"
    }

    fn dataset(n: usize) -> Dataset {
        Dataset::new(
            (0..n)
                .map(|i| Example {
                    qid: format!("q{i}"),
                    text: format!("question {i}"),
                    label: Label::from_bool(i % 3 == 0),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn three_row_fixture_counts() {
        let d = read_csv(fixture().as_bytes()).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.n_negative(), 2);
        assert_eq!(d.n_positive(), 1);
        assert_eq!(d.examples()[1].text, "Why are people, like, so crazy?");
        assert_eq!(d.examples()[2].text, "What is a \"monad\"?");
        let dist = class_distribution(&d);
        assert_eq!((dist.n_negative, dist.n_positive), (2, 1));
        assert_eq!(dist.positive_fraction, 1.0 / 3.0);
    }

    #[test]
    fn header_only_is_empty() {
        let d = read_csv("qid,question_text,target\n".as_bytes()).unwrap();
        assert!(d.is_empty());
        assert_eq!(class_distribution(&d).positive_fraction, 0.0);
    }

    #[test]
    fn all_negative_distribution() {
        let d = Dataset::new(
            (0..4)
                .map(|i| Example {
                    qid: i.to_string(),
                    text: String::new(),
                    label: Label::Sincere,
                })
                .collect(),
        )
        .unwrap();
        let dist = class_distribution(&d);
        assert_eq!(
            (dist.n_negative, dist.n_positive, dist.positive_fraction),
            (4, 0, 0.0)
        );
    }

    #[test]
    fn garbled_header_names_column() {
        let err = read_csv("qid,text,target\n".as_bytes()).unwrap_err();
        match err {
            CorpusError::Header {
                expected, found, ..
            } => {
                assert_eq!(expected, "question_text");
                assert_eq!(found.as_deref(), Some("text"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = read_csv("qid,question_text\n".as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            CorpusError::Header {
                expected: "target",
                found: None,
                ..
            }
        ));
    }

    #[test]
    fn bad_label_reports_line() {
        let err = read_csv("qid,question_text,target\na,x,0\nb,y,2\n".as_bytes()).unwrap_err();
        match err {
            CorpusError::Label { line, found } => {
                assert_eq!(line, 3);
                assert_eq!(found, "2");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_qid_rejected() {
        let err = read_csv("qid,question_text,target\na,x,0\na,y,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateQid { line: 3, .. }));
    }

    #[test]
    fn csv_round_trip_preserves_bytes() {
        let d = read_csv(fixture().as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(d, back);
    }

    #[test]
    fn ten_examples_split_eight_two() {
        let d = dataset(10);
        let (train, test) = train_test_split(&d, &SplitSpec::new(0.8, 42).unwrap()).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        let tr: HashSet<_> = train.examples().iter().map(|e| &e.qid).collect();
        assert!(test.examples().iter().all(|e| !tr.contains(&e.qid)));
    }

    #[test]
    fn split_is_seed_deterministic() {
        let d = dataset(30);
        let spec = SplitSpec::new(0.8, 42).unwrap();
        assert_eq!(
            split_indices(&d, &spec).unwrap(),
            split_indices(&d, &spec).unwrap()
        );
    }

    #[test]
    fn different_seeds_same_sizes() {
        let d = dataset(5);
        let a = split_indices(&d, &SplitSpec::new(0.8, 1).unwrap()).unwrap();
        let b = split_indices(&d, &SplitSpec::new(0.8, 2).unwrap()).unwrap();
        assert_eq!((a.train.len(), a.test.len()), (4, 1));
        assert_eq!((b.train.len(), b.test.len()), (4, 1));
        assert_ne!(a, b);
    }

    #[test]
    fn too_small_split_errors() {
        assert!(matches!(
            split_indices(&dataset(1), &SplitSpec::default()),
            Err(CorpusError::TooSmall { .. })
        ));
        // round(0.9 * 2) = 2 leaves no test example
        assert!(split_indices(&dataset(2), &SplitSpec::new(0.9, 0).unwrap()).is_err());
        assert!(SplitSpec::new(1.0, 0).is_err());
        assert!(SplitSpec::new(0.0, 0).is_err());
    }

    #[test]
    fn stratified_keeps_both_classes_in_test() {
        let d = dataset(30);
        let spec = SplitSpec::new(0.8, 9).unwrap().stratified(true);
        let (train, test) = train_test_split(&d, &spec).unwrap();
        assert_eq!(train.n_positive(), 8);
        assert_eq!(test.n_positive(), 2);
    }

    #[test]
    fn manifest_lines() {
        let d = dataset(4);
        let s = SplitIndices {
            train: vec![0, 2],
            test: vec![1, 3],
        };
        let mut out = Vec::new();
        write_split_manifest(&d, &s, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "q0\ttrain\nq1\ttest\nq2\ttrain\nq3\ttest\n"
        );
    }
}
