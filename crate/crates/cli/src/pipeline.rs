//! The five commands as library functions. Each run is single-process and its
//! stages run in a fixed order: load → split → tokenize → vocabulary →
//! features → resample (training part only) → fit → evaluate → persist.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toxic_core::corpus::{
    class_distribution, load_csv, split_indices, write_split_manifest, ClassDistribution, Label,
    SplitIndices,
};
use toxic_core::eval::{confusion, metrics, MetricsReport};
use toxic_core::linear::{nb_fit, svm_fit};
use toxic_core::neural::{train, SequenceClassifier, TrainHistory};
use toxic_core::resample::{
    cluster_centroids_undersample, random_undersample, CentroidMode, ResampleMode,
};
use toxic_core::textprep::{
    build_vocab, frequency_distribution, tokenize, tokenize_all, TokenizedDoc, TokenizerConfig,
    Vocab,
};
use toxic_core::vectorize::{
    build_embedding_matrix, encode_sequences, fit_tfidf, random_embedding_matrix, read_embeddings,
    SparseVector, TfidfModel,
};
use toxic_core::Dataset;

use crate::artifact::{ModelArtifact, ModelPayload, ARTIFACT_FORMAT_VERSION};
use crate::config::{EmbeddingSpec, ExperimentConfig, Features, ModelConfig};
use crate::CliError;

/// Upper bound on `rows × features` when TF-IDF rows are densified for k-means.
pub const MAX_DENSE_CELLS: usize = 50_000_000;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SPLIT_FILE: &str = "split.tsv";
pub const MODEL_FILE: &str = "model.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const METRICS_CSV: &str = "metrics.csv";
pub const METRICS_JSON: &str = "metrics.json";
pub const METRICS_TXT: &str = "metrics.txt";

struct Stage {
    name: &'static str,
    start: Instant,
}

impl Stage {
    fn new(name: &'static str) -> Self {
        Stage {
            name,
            start: Instant::now(),
        }
    }
}

impl Drop for Stage {
    fn drop(&mut self) {
        info!("{}: {:.3}s", self.name, self.start.elapsed().as_secs_f64());
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path.display(), e))
}

/// Writes `metrics.csv`, `metrics.json` and `metrics.txt` into `dir`.
pub fn write_metrics(report: &MetricsReport, dir: &Path) -> Result<(), CliError> {
    create_dir(dir)?;
    write_file(&dir.join(METRICS_CSV), &report.to_csv())?;
    write_file(&dir.join(METRICS_JSON), &report.to_json())?;
    write_file(&dir.join(METRICS_TXT), &report.to_table())
}

fn file_sha256(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path.display(), e))?;
    Ok(format!("{:x}", Sha256::digest(bytes)))
}

// ---------------------------------------------------------------- eda

#[derive(Debug, Clone, PartialEq)]
pub struct EdaOutcome {
    pub distribution: ClassDistribution,
    pub top_tokens: Vec<(String, usize)>,
}

/// Class balance and the most frequent tokens of insincere questions (cleaned
/// with the `eda` tokenizer). Writes `class_distribution.tsv` and
/// `top_tokens.tsv` into `out_dir`.
pub fn run_eda(data: &Path, out_dir: &Path, top_k: usize) -> Result<EdaOutcome, CliError> {
    let d = load_csv(data)?;
    let distribution = class_distribution(&d);
    let cfg = TokenizerConfig::eda();
    let insincere: Vec<TokenizedDoc> = d
        .examples()
        .iter()
        .filter(|e| e.label.is_positive())
        .map(|e| tokenize(&e.text, &cfg))
        .collect();
    let top_tokens = frequency_distribution(&insincere, top_k);

    create_dir(out_dir)?;
    let n = d.len() as f64;
    let mut dist = String::from("label\tcount\tfraction\n");
    for (label, count) in [(0, distribution.n_negative), (1, distribution.n_positive)] {
        dist.push_str(&format!("{label}\t{count}\t{}\n", count as f64 / n));
    }
    write_file(&out_dir.join("class_distribution.tsv"), &dist)?;
    let mut tokens = String::from("token\tcount\n");
    for (t, c) in &top_tokens {
        tokens.push_str(&format!("{t}\t{c}\n"));
    }
    write_file(&out_dir.join("top_tokens.tsv"), &tokens)?;
    Ok(EdaOutcome {
        distribution,
        top_tokens,
    })
}

// ---------------------------------------------------------------- train

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub artifact: ModelArtifact,
    pub report: MetricsReport,
    pub history: Option<TrainHistory>,
    pub split: SplitIndices,
    /// Class counts of the training rows the model was fitted on.
    pub fitted_distribution: ClassDistribution,
    /// Class counts of the rows the report was computed on.
    pub evaluated_distribution: ClassDistribution,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    artifact_format: u32,
    data_sha256: String,
    rows: usize,
    train_rows: usize,
    test_rows: usize,
    fitted_rows: usize,
    evaluated_rows: usize,
    seeds: Seeds,
    config: ExperimentConfig,
}

#[derive(Serialize, Deserialize)]
struct Seeds {
    split: u64,
    resample: u64,
    model: u64,
    shuffle: u64,
}

fn model_seeds(model: &ModelConfig, cfg: &ExperimentConfig) -> (u64, u64) {
    match model {
        ModelConfig::Nb { .. } => (0, 0),
        ModelConfig::Svm(h) => (h.seed, h.seed),
        ModelConfig::Gru(h) | ModelConfig::Lstm(h) => (h.seed, cfg.train.seed),
    }
}

fn distribution(labels: &[Label]) -> ClassDistribution {
    let n_positive = labels.iter().filter(|l| l.is_positive()).count();
    let n = labels.len();
    ClassDistribution {
        n_negative: n - n_positive,
        n_positive,
        positive_fraction: if n == 0 {
            0.0
        } else {
            n_positive as f64 / n as f64
        },
    }
}

fn densify(rows: &[SparseVector]) -> Result<Vec<Vec<f64>>, CliError> {
    let dim = rows.first().map_or(0, SparseVector::dim);
    if rows.len().saturating_mul(dim) > MAX_DENSE_CELLS {
        return Err(CliError::Config(format!(
            "centroid resampling would densify {} × {dim} TF-IDF cells (limit {MAX_DENSE_CELLS}); lower max_features or use random undersampling",
            rows.len()
        )));
    }
    Ok(rows.iter().map(SparseVector::to_dense).collect())
}

/// Training rows kept by the resampler plus any synthetic TF-IDF rows.
struct Resampled {
    kept: Vec<usize>,
    synthetic: Vec<(SparseVector, Label)>,
}

fn resample_train(
    cfg: &ExperimentConfig,
    docs: &[TokenizedDoc],
    labels: &[Label],
    tfidf_rows: Option<&[SparseVector]>,
    vocab: &Vocab,
) -> Result<Resampled, CliError> {
    let seed = cfg.resample.seed;
    let centroids = |mode: CentroidMode| -> Result<Resampled, CliError> {
        let owned;
        let rows = match tfidf_rows {
            Some(r) => r,
            None => {
                owned = fit_tfidf(docs, vocab)?.transform_all(docs);
                &owned[..]
            }
        };
        let res = cluster_centroids_undersample(&densify(rows)?, labels, mode, seed)?;
        Ok(Resampled {
            kept: res.kept_indices,
            synthetic: res
                .synthetic_rows
                .into_iter()
                .map(|(v, l)| (SparseVector::from_dense(&v), l))
                .collect(),
        })
    };
    match cfg.resample.mode {
        ResampleMode::None => Ok(Resampled {
            kept: (0..labels.len()).collect(),
            synthetic: Vec::new(),
        }),
        ResampleMode::Random => Ok(Resampled {
            kept: random_undersample(labels, seed)?.kept_indices,
            synthetic: Vec::new(),
        }),
        ResampleMode::CentroidsSoft => centroids(CentroidMode::Soft),
        ResampleMode::CentroidsHard => centroids(CentroidMode::Hard),
    }
}

fn build_classifier(cfg: &ExperimentConfig, vocab: &Vocab) -> Result<SequenceClassifier, CliError> {
    let hyper = cfg.model.neural().expect("sequence model");
    let cell = cfg.model.cell().expect("sequence model");
    let (embedding, trainable) = match &cfg.embedding {
        EmbeddingSpec::None => (
            random_embedding_matrix(vocab, hyper.embedding_dim, hyper.seed),
            true,
        ),
        EmbeddingSpec::Pretrained { format, path } => {
            let _s = Stage::new("load embeddings");
            let file = File::open(path).map_err(|e| CliError::io(path.display(), e))?;
            let keep = |w: &str| vocab.get(w).is_some() || vocab.get(&w.to_lowercase()).is_some();
            let table = read_embeddings(BufReader::new(file), *format, keep)?;
            let found = vocab
                .terms()
                .iter()
                .filter(|t| table.lookup(t).is_some())
                .count();
            info!(
                "pretrained vectors cover {found} of {} vocabulary terms",
                vocab.len()
            );
            (
                build_embedding_matrix(vocab, &table, hyper.seed),
                hyper.fine_tune_embedding,
            )
        }
    };
    Ok(SequenceClassifier::new(
        cell,
        embedding,
        trainable,
        hyper.hidden_dim,
        hyper.dense_dim,
        hyper.seed,
    ))
}

/// Runs a full experiment and writes every output into `cfg.output_dir`.
pub fn run_train(cfg: &ExperimentConfig) -> Result<TrainOutcome, CliError> {
    cfg.validate()?;
    let tokenizer = cfg.tokenizer_config()?;

    let data = {
        let _s = Stage::new("load");
        load_csv(&cfg.data)?
    };
    let split = split_indices(&data, &cfg.split)?;
    let train_set = data.select(&split.train);
    let test_set = data.select(&split.test);
    info!(
        "{} rows: {} train, {} test ({} positive in test)",
        data.len(),
        train_set.len(),
        test_set.len(),
        test_set.n_positive()
    );

    let (train_docs, test_docs) = {
        let _s = Stage::new("tokenize");
        (
            tokenize_all(train_set.texts(), &tokenizer),
            tokenize_all(test_set.texts(), &tokenizer),
        )
    };
    let vocab = build_vocab(&train_docs, cfg.max_features);
    let train_labels = train_set.labels();

    // evaluation rows: the natural test split, or a balanced sample of it
    let eval_rows: Vec<usize> = if cfg.eval_on_resampled {
        random_undersample(&test_set.labels(), cfg.resample.seed)?.kept_indices
    } else {
        (0..test_set.len()).collect()
    };
    let eval_labels: Vec<Label> = eval_rows
        .iter()
        .map(|&i| test_set.examples()[i].label)
        .collect();
    let eval_docs: Vec<TokenizedDoc> = eval_rows.iter().map(|&i| test_docs[i].clone()).collect();

    let threshold = cfg.train.threshold;
    let (payload, history, fitted) = match cfg.features {
        Features::Tfidf => {
            let (tfidf, x) = {
                let _s = Stage::new("tfidf");
                let tfidf = fit_tfidf(&train_docs, &vocab)?;
                let x = tfidf.transform_all(&train_docs);
                (tfidf, x)
            };
            let res = {
                let _s = Stage::new("resample");
                resample_train(cfg, &train_docs, &train_labels, Some(&x), &vocab)?
            };
            let mut fx: Vec<SparseVector> = res.kept.iter().map(|&i| x[i].clone()).collect();
            let mut fy: Vec<Label> = res.kept.iter().map(|&i| train_labels[i]).collect();
            for (v, l) in res.synthetic {
                fx.push(v);
                fy.push(l);
            }
            let _s = Stage::new("fit");
            let payload = fit_linear(cfg, tfidf, &fx, &fy)?;
            (payload, None, distribution(&fy))
        }
        Features::Sequence => {
            let x = encode_sequences(&vocab, &train_docs, cfg.maxlen);
            let res = {
                let _s = Stage::new("resample");
                resample_train(cfg, &train_docs, &train_labels, None, &vocab)?
            };
            debug_assert!(res.synthetic.is_empty());
            let fx = x.select(&res.kept);
            let fy: Vec<Label> = res.kept.iter().map(|&i| train_labels[i]).collect();
            let model = build_classifier(cfg, &vocab)?;
            let val = encode_sequences(&vocab, &eval_docs, cfg.maxlen);
            let _s = Stage::new("fit");
            let (model, history) =
                train(model, (&fx, &fy), Some((&val, &eval_labels)), &cfg.train)?;
            (
                ModelPayload::Sequence {
                    maxlen: cfg.maxlen,
                    model,
                },
                Some(history),
                distribution(&fy),
            )
        }
    };

    let mut artifact = ModelArtifact {
        format_version: ARTIFACT_FORMAT_VERSION,
        kind: cfg.model.name().to_string(),
        tokenizer,
        vocab_hash: vocab.fingerprint(),
        vocab,
        config: cfg.clone(),
        model: payload,
        metrics: None,
    };

    let report = {
        let _s = Stage::new("evaluate");
        let texts: Vec<&str> = eval_rows
            .iter()
            .map(|&i| test_set.examples()[i].text.as_str())
            .collect();
        let scores = artifact.score(texts, threshold)?;
        let predicted: Vec<Label> = scores.label.iter().map(|&b| Label::from_bool(b)).collect();
        metrics(&confusion(&eval_labels, &predicted).map_err(|e| CliError::Data(e.to_string()))?)
    };
    artifact.metrics = Some(report.clone());

    let _s = Stage::new("persist");
    let out = &cfg.output_dir;
    create_dir(out)?;
    let mut split_tsv = Vec::new();
    write_split_manifest(&data, &split, &mut split_tsv)
        .map_err(|e| CliError::io("split manifest", e))?;
    std::fs::write(out.join(SPLIT_FILE), split_tsv)
        .map_err(|e| CliError::io(out.join(SPLIT_FILE).display(), e))?;
    artifact.save(&out.join(MODEL_FILE))?;
    write_metrics(&report, out)?;
    if let Some(h) = &history {
        write_file(&out.join(HISTORY_FILE), &h.to_csv())?;
    }
    let (model_seed, shuffle_seed) = model_seeds(&cfg.model, cfg);
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        artifact_format: ARTIFACT_FORMAT_VERSION,
        data_sha256: file_sha256(&cfg.data)?,
        rows: data.len(),
        train_rows: split.train.len(),
        test_rows: split.test.len(),
        fitted_rows: fitted.n_negative + fitted.n_positive,
        evaluated_rows: eval_rows.len(),
        seeds: Seeds {
            split: cfg.split.seed,
            resample: cfg.resample.seed,
            model: model_seed,
            shuffle: shuffle_seed,
        },
        config: cfg.clone(),
    };
    write_file(
        &out.join(MANIFEST_FILE),
        &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;

    Ok(TrainOutcome {
        artifact,
        report,
        history,
        split,
        fitted_distribution: fitted,
        evaluated_distribution: distribution(&eval_labels),
    })
}

fn fit_linear(
    cfg: &ExperimentConfig,
    tfidf: TfidfModel,
    x: &[SparseVector],
    y: &[Label],
) -> Result<ModelPayload, CliError> {
    match &cfg.model {
        ModelConfig::Nb { alpha } => Ok(ModelPayload::Nb {
            model: nb_fit(x, y, *alpha)?,
            tfidf,
        }),
        ModelConfig::Svm(h) => Ok(ModelPayload::Svm {
            model: svm_fit(x, y, h)?,
            tfidf,
        }),
        _ => unreachable!("validated: tfidf features imply a linear model"),
    }
}

// ---------------------------------------------------------------- evaluate

/// Scores every row of `data` with a saved model and writes the metric files
/// into `out_dir`. `threshold` defaults to the one the model was trained with.
pub fn run_evaluate(
    artifact: &Path,
    data: &Path,
    out_dir: &Path,
    threshold: Option<f64>,
) -> Result<MetricsReport, CliError> {
    let a = ModelArtifact::load(artifact)?;
    let d = load_csv(data)?;
    let report = evaluate_dataset(&a, &d, threshold)?;
    write_metrics(&report, out_dir)?;
    Ok(report)
}

pub fn evaluate_dataset(
    a: &ModelArtifact,
    d: &Dataset,
    threshold: Option<f64>,
) -> Result<MetricsReport, CliError> {
    let threshold = checked_threshold(threshold.unwrap_or(a.config.train.threshold))?;
    let scores = a.score(d.texts(), threshold)?;
    let predicted: Vec<Label> = scores.label.iter().map(|&b| Label::from_bool(b)).collect();
    let cm = confusion(&d.labels(), &predicted).map_err(|e| CliError::Data(e.to_string()))?;
    Ok(metrics(&cm))
}

fn checked_threshold(t: f64) -> Result<f64, CliError> {
    if (0.0..=1.0).contains(&t) {
        Ok(t)
    } else {
        Err(CliError::Config(format!(
            "threshold must lie in [0, 1], got {t}"
        )))
    }
}

// ---------------------------------------------------------------- predict

/// Reads one question per line; line numbers in errors start at 1.
pub fn read_questions(path: &Path) -> Result<Vec<String>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path.display(), e))?;
    BufReader::new(file)
        .lines()
        .enumerate()
        .map(|(i, l)| {
            l.map_err(|e| CliError::Data(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Writes `probability<TAB>label` for each question; returns the row count.
pub fn run_predict<W: Write>(
    artifact: &Path,
    questions: &[String],
    threshold: f64,
    out: &mut W,
) -> Result<usize, CliError> {
    let threshold = checked_threshold(threshold)?;
    let a = ModelArtifact::load(artifact)?;
    let scores = a.score(questions.iter().map(String::as_str), threshold)?;
    for (p, l) in scores.probability.iter().zip(&scores.label) {
        writeln!(out, "{p}\t{}", u8::from(*l)).map_err(|e| CliError::io("output", e))?;
    }
    Ok(questions.len())
}

// ---------------------------------------------------------------- report

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub run: String,
    pub model: String,
    pub resample: String,
    pub report: MetricsReport,
}

/// Collects `metrics.json` (and the model and resample mode from
/// `manifest.json`, when present) from each run directory.
pub fn collect_runs(dirs: &[PathBuf]) -> Result<Vec<ReportRow>, CliError> {
    dirs.iter()
        .map(|dir| {
            let path = dir.join(METRICS_JSON);
            let text =
                std::fs::read_to_string(&path).map_err(|e| CliError::io(path.display(), e))?;
            let report: MetricsReport = serde_json::from_str(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let manifest: Option<Manifest> = std::fs::read_to_string(dir.join(MANIFEST_FILE))
                .ok()
                .and_then(|t| serde_json::from_str(&t).ok());
            let (model, resample) = manifest.map_or(("-".into(), "-".into()), |m| {
                (
                    m.config.model.name().to_string(),
                    m.config.resample.mode.to_string(),
                )
            });
            Ok(ReportRow {
                run: dir.display().to_string(),
                model,
                resample,
                report,
            })
        })
        .collect()
}

const REPORT_COLUMNS: [&str; 9] = [
    "run",
    "model",
    "resample",
    "accuracy",
    "precision_1",
    "recall_1",
    "f1_1",
    "macro_f1",
    "weighted_f1",
];

fn report_cells(r: &ReportRow) -> [String; 9] {
    let m = &r.report;
    [
        r.run.clone(),
        r.model.clone(),
        r.resample.clone(),
        format!("{:.4}", m.accuracy),
        format!("{:.4}", m.per_class[1].precision),
        format!("{:.4}", m.per_class[1].recall),
        format!("{:.4}", m.per_class[1].f1),
        format!("{:.4}", m.macro_avg.f1),
        format!("{:.4}", m.weighted_avg.f1),
    ]
}

/// Side-by-side comparison table of several runs.
pub fn format_report_table(rows: &[ReportRow]) -> String {
    let cells: Vec<[String; 9]> = rows.iter().map(report_cells).collect();
    let mut width = REPORT_COLUMNS.map(str::len);
    for row in &cells {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cols: &[String]| {
        let mut s = String::new();
        for (i, (c, w)) in cols.iter().zip(width).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            if i < 3 {
                s.push_str(&format!("{c:<w$}"));
            } else {
                s.push_str(&format!("{c:>w$}"));
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(&REPORT_COLUMNS.map(String::from));
    for row in &cells {
        out.push_str(&line(row));
    }
    out
}

/// Same columns as [`format_report_table`], full precision, comma separated.
pub fn format_report_csv(rows: &[ReportRow]) -> String {
    let mut out = REPORT_COLUMNS.join(",") + "\n";
    for r in rows {
        let m = &r.report;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.run,
            r.model,
            r.resample,
            m.accuracy,
            m.per_class[1].precision,
            m.per_class[1].recall,
            m.per_class[1].f1,
            m.macro_avg.f1,
            m.weighted_avg.f1
        ));
    }
    out
}
