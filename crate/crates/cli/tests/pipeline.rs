use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;
use toxic_cli::pipeline::{
    collect_runs, format_report_csv, run_eda, MANIFEST_FILE, METRICS_CSV, METRICS_JSON,
    METRICS_TXT, MODEL_FILE,
};
use toxic_cli::{
    run_evaluate, run_predict, run_train, CliError, EmbeddingSpec, ExperimentConfig, ModelArtifact,
    ModelConfig, ModelPayload, NeuralHyper,
};
use toxic_core::corpus::load_csv;
use toxic_core::resample::ResampleMode;
use toxic_core::textprep::tokenize;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn config(model: &str, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(
        fixture("questions_1k.csv"),
        ModelConfig::by_name(model).unwrap(),
        out,
    );
    cfg.split.stratify = true;
    cfg
}

fn small_gru(out: &Path) -> ExperimentConfig {
    let mut cfg = config("gru", out);
    cfg.model = ModelConfig::Gru(NeuralHyper {
        embedding_dim: 16,
        hidden_dim: 8,
        dense_dim: 8,
        ..NeuralHyper::default()
    });
    cfg.train.epochs = 2;
    cfg.maxlen = 30;
    cfg
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn write_csv(dir: &Path, rows: &[(&str, u8)]) -> PathBuf {
    let path = dir.join("data.csv");
    let mut s = String::from("qid,question_text,target\n");
    for (i, (t, l)) in rows.iter().enumerate() {
        s.push_str(&format!("q{i},\"{t}\",{l}\n"));
    }
    std::fs::write(&path, s).unwrap();
    path
}

fn predict_lines(model: &Path, questions: &[&str], threshold: f64) -> Vec<(f64, u8)> {
    let q: Vec<String> = questions.iter().map(|s| s.to_string()).collect();
    let mut out = Vec::new();
    assert_eq!(
        run_predict(model, &q, threshold, &mut out).unwrap(),
        q.len()
    );
    String::from_utf8(out)
        .unwrap()
        .lines()
        .map(|l| {
            let (p, lab) = l.split_once('\t').unwrap();
            (p.parse().unwrap(), lab.parse().unwrap())
        })
        .collect()
}

#[test]
fn nb_training_is_deterministic_and_writes_outputs() {
    let dir = TempDir::new().unwrap();
    let a = dir.path();
    let files = [
        MODEL_FILE,
        METRICS_CSV,
        METRICS_JSON,
        METRICS_TXT,
        "split.tsv",
        MANIFEST_FILE,
    ];
    run_train(&config("nb", a)).unwrap();
    let first: Vec<Vec<u8>> = files.iter().map(|f| read(&a.join(f))).collect();
    run_train(&config("nb", a)).unwrap();
    for (f, bytes) in files.iter().zip(&first) {
        assert_eq!(&read(&a.join(f)), bytes, "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&read(&a.join(MANIFEST_FILE))).unwrap();
    assert_eq!(manifest["data_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn resampling_never_touches_the_test_split() {
    let dir = TempDir::new().unwrap();
    let mut seen = Vec::new();
    for (i, mode) in [
        ResampleMode::None,
        ResampleMode::Random,
        ResampleMode::CentroidsSoft,
        ResampleMode::CentroidsHard,
    ]
    .into_iter()
    .enumerate()
    {
        let mut cfg = config("nb", &dir.path().join(i.to_string()));
        cfg.resample.mode = mode;
        let out = run_train(&cfg).unwrap();
        if mode != ResampleMode::None {
            assert_eq!(
                out.fitted_distribution.n_positive, out.fitted_distribution.n_negative,
                "{mode}"
            );
        }
        seen.push((out.split.test.clone(), out.evaluated_distribution));
    }
    assert!(seen.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(seen[0].1.n_positive, 12);
    assert_eq!(seen[0].1.n_negative, 188);
}

#[test]
fn balanced_evaluation_is_opt_in() {
    let dir = TempDir::new().unwrap();
    let mut cfg = config("nb", dir.path());
    cfg.resample.mode = ResampleMode::Random;
    cfg.eval_on_resampled = true;
    let out = run_train(&cfg).unwrap();
    assert_eq!(
        out.evaluated_distribution.n_positive,
        out.evaluated_distribution.n_negative
    );
    assert_eq!(out.report.confusion.total(), 24);
}

#[test]
fn predict_matches_nb_posterior() {
    let dir = TempDir::new().unwrap();
    run_train(&config("nb", dir.path())).unwrap();
    let model = dir.path().join(MODEL_FILE);
    let questions = [
        "Why are liberals so lazy?",
        "How do I get better at chess?",
        "",
        "zzz qqq unseen words only",
    ];
    let got = predict_lines(&model, &questions, 0.5);
    let a = ModelArtifact::load(&model).unwrap();
    let ModelPayload::Nb { tfidf, model: nb } = &a.model else {
        panic!("expected an nb payload")
    };
    for (q, (p, label)) in questions.iter().zip(&got) {
        let x = tfidf.transform(&tokenize(q, &a.tokenizer));
        let mut lj = nb.class_log_prior;
        for (c, l) in lj.iter_mut().enumerate() {
            for (t, v) in x.iter() {
                *l += v * nb.feature_log_prob[c][t];
            }
        }
        let want = 1.0 / (1.0 + (lj[0] - lj[1]).exp());
        assert!((p - want).abs() < 1e-12, "{q:?}: {p} vs {want}");
        assert_eq!(*label, u8::from(*p > 0.5));
    }
    // no tokens at all: the prior decides
    let prior = nb.class_log_prior[1].exp();
    assert!((got[2].0 - prior).abs() < 1e-12);
}

#[test]
fn threshold_extremes_and_empty_input() {
    let dir = TempDir::new().unwrap();
    for model in ["nb", "svm"] {
        let out = dir.path().join(model);
        run_train(&config(model, &out)).unwrap();
        let path = out.join(MODEL_FILE);
        let qs = [
            "Why are vegans so stupid?",
            "What is the best book on rust?",
        ];
        assert!(
            predict_lines(&path, &qs, 1.0).iter().all(|(_, l)| *l == 0),
            "{model}"
        );
        assert!(
            predict_lines(&path, &qs, 0.0).iter().all(|(_, l)| *l == 1),
            "{model}"
        );
        assert!(predict_lines(&path, &[], 0.5).is_empty());
        let mut sink = Vec::new();
        assert!(matches!(
            run_predict(&path, &[], 1.5, &mut sink),
            Err(CliError::Config(_))
        ));
    }
}

#[test]
fn evaluate_counts_agree_with_predictions() {
    let dir = TempDir::new().unwrap();
    let train_dir = dir.path().join("train");
    run_train(&config("nb", &train_dir)).unwrap();
    let model = train_dir.join(MODEL_FILE);

    let data = load_csv(fixture("questions_1k.csv")).unwrap();
    let rows: Vec<(&str, u8)> = data
        .examples()
        .iter()
        .take(20)
        .map(|e| (e.text.as_str(), e.label.as_u8()))
        .collect();
    let csv = write_csv(dir.path(), &rows);
    let texts: Vec<&str> = rows.iter().map(|r| r.0).collect();
    let preds = predict_lines(&model, &texts, 0.5);
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for ((_, truth), (_, pred)) in rows.iter().zip(&preds) {
        match (truth, pred) {
            (1, 1) => tp += 1,
            (0, 1) => fp += 1,
            (1, 0) => fn_ += 1,
            _ => tn += 1,
        }
    }

    let e1 = dir.path().join("e1");
    let e2 = dir.path().join("e2");
    let report = run_evaluate(&model, &csv, &e1, None).unwrap();
    run_evaluate(&model, &csv, &e2, None).unwrap();
    let cm = report.confusion;
    assert_eq!((cm.tp, cm.fp, cm.fn_, cm.tn), (tp, fp, fn_, tn));
    for f in [METRICS_CSV, METRICS_JSON, METRICS_TXT] {
        assert_eq!(read(&e1.join(f)), read(&e2.join(f)));
    }
}

#[test]
fn artifacts_with_wrong_version_or_vocab_are_refused() {
    let dir = TempDir::new().unwrap();
    run_train(&config("nb", dir.path())).unwrap();
    let model = dir.path().join(MODEL_FILE);
    let mut value: serde_json::Value = serde_json::from_slice(&read(&model)).unwrap();

    let mut old = value.clone();
    old["format_version"] = serde_json::json!(0);
    let p = dir.path().join("old.json");
    std::fs::write(&p, old.to_string()).unwrap();
    let err = ModelArtifact::load(&p).unwrap_err();
    assert!(
        matches!(err, CliError::Data(ref m) if m.contains("format version")),
        "{err}"
    );

    value["vocab_hash"] = serde_json::json!("0".repeat(64));
    let p = dir.path().join("tampered.json");
    std::fs::write(&p, value.to_string()).unwrap();
    let err = ModelArtifact::load(&p).unwrap_err();
    assert!(
        matches!(err, CliError::Data(ref m) if m.contains("hash")),
        "{err}"
    );
}

#[test]
fn eda_outputs() {
    let dir = TempDir::new().unwrap();
    let out = run_eda(&fixture("questions_1k.csv"), dir.path(), 10).unwrap();
    assert_eq!(
        (out.distribution.n_negative, out.distribution.n_positive),
        (940, 60)
    );
    assert_eq!(out.top_tokens.len(), 10);
    assert!(out
        .top_tokens
        .windows(2)
        .all(|w| w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0)));
    assert!(out.top_tokens.iter().all(|(t, _)| t.chars().count() >= 4));
    let tsv = std::fs::read_to_string(dir.path().join("top_tokens.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 11);

    let csv = write_csv(
        dir.path(),
        &[("How do I learn rust?", 0), ("What is calculus?", 0)],
    );
    let single = run_eda(&csv, &dir.path().join("single"), 5).unwrap();
    assert_eq!(
        (
            single.distribution.n_negative,
            single.distribution.n_positive
        ),
        (2, 0)
    );
    assert!(single.top_tokens.is_empty());
    let dist = std::fs::read_to_string(dir.path().join("single/class_distribution.tsv")).unwrap();
    assert_eq!(dist, "label\tcount\tfraction\n0\t2\t1\n1\t0\t0\n");
}

#[test]
fn gru_with_pretrained_vectors_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let mut bytes = Vec::new();
    let out = dir.path();
    for threads in [1, 1, 3] {
        let mut cfg = small_gru(out);
        cfg.embedding = format!("glove:{}", fixture("glove_fixture.txt").display())
            .parse::<EmbeddingSpec>()
            .unwrap();
        cfg.train.threads = threads;
        let res = run_train(&cfg).unwrap();
        assert_eq!(res.history.as_ref().unwrap().len(), 2);
        let weights =
            serde_json::to_string(&ModelArtifact::load(&out.join(MODEL_FILE)).unwrap().model)
                .unwrap();
        bytes.push((
            read(&out.join(MODEL_FILE)),
            weights,
            read(&out.join(METRICS_JSON)),
            read(&out.join("history.csv")),
        ));
    }
    assert_eq!(bytes[0], bytes[1]);
    // the thread count is recorded in the config, so compare everything else
    assert_eq!(bytes[1].1, bytes[2].1);
    assert_eq!(bytes[1].2, bytes[2].2);
    assert_eq!(bytes[1].3, bytes[2].3);
}

#[test]
fn report_collects_runs() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("none");
    let b = dir.path().join("random");
    run_train(&config("nb", &a)).unwrap();
    let mut cfg = config("nb", &b);
    cfg.resample.mode = ResampleMode::Random;
    run_train(&cfg).unwrap();
    let rows = collect_runs(&[a, b]).unwrap();
    assert_eq!(rows[0].resample, "none");
    assert_eq!(rows[1].resample, "random");
    let csv = format_report_csv(&rows);
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("run,model,resample,accuracy"));
}

fn toxic(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_toxic"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

#[test]
fn binary_exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let data = fixture("questions_1k.csv");
    let data = data.to_str().unwrap();

    let bad_model = toxic(&[
        "train",
        "--data",
        data,
        "--model",
        "forest",
        "--output-dir",
        out,
    ]);
    assert_eq!(bad_model.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_model.stderr).contains("forest"));

    let missing = toxic(&[
        "train",
        "--data",
        "/nonexistent/data.csv",
        "--model",
        "nb",
        "--output-dir",
        out,
    ]);
    assert_eq!(missing.status.code(), Some(2));

    let soft_seq = toxic(&[
        "train",
        "--data",
        data,
        "--model",
        "gru",
        "--resample",
        "centroids-soft",
        "--output-dir",
        out,
    ]);
    assert_eq!(soft_seq.status.code(), Some(1));

    let ok = toxic(&[
        "train",
        "--data",
        data,
        "--model",
        "nb",
        "--output-dir",
        out,
    ]);
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    let model = dir.path().join(MODEL_FILE);
    let pred = toxic(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--text",
        "How do I learn chess?",
        "--threshold",
        "1",
    ]);
    assert_eq!(pred.status.code(), Some(0));
    let stdout = String::from_utf8(pred.stdout).unwrap();
    assert!(stdout.trim_end().ends_with("\t0"), "{stdout}");
}
