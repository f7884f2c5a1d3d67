use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toxic_cli::config::{EmbeddingSpec, ExperimentConfig, Features, ModelConfig};
use toxic_cli::pipeline::{
    self, collect_runs, format_report_csv, format_report_table, read_questions,
};
use toxic_cli::CliError;
use toxic_core::resample::ResampleMode;

#[derive(Parser)]
#[command(
    name = "toxic",
    version,
    about = "Insincere-question classification experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Class balance and top tokens of insincere questions.
    Eda {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "eda")]
        output_dir: PathBuf,
        #[arg(long, default_value_t = 20)]
        top_k: usize,
    },
    /// Split, resample, fit and evaluate one configuration.
    Train(TrainArgs),
    /// Score a labelled CSV with a saved model.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        output_dir: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Print `probability<TAB>label` for each question.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// One question per line.
        #[arg(long, conflicts_with = "text")]
        input: Option<PathBuf>,
        /// A question given inline; repeatable.
        #[arg(long)]
        text: Vec<String>,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare metrics across run directories.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        csv: bool,
    },
}

/// Every flag overrides the matching field of `--config` (or of the defaults
/// when no config file is given).
#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// nb, svm, gru or lstm (default hyperparameters).
    #[arg(long)]
    model: Option<String>,
    /// tfidf or sequence; defaults to the model's natural choice.
    #[arg(long)]
    features: Option<String>,
    /// none, glove:PATH or fasttext:PATH.
    #[arg(long)]
    embedding: Option<String>,
    #[arg(long)]
    tokenizer: Option<String>,
    /// none, random, centroids-soft or centroids-hard.
    #[arg(long)]
    resample: Option<String>,
    #[arg(long)]
    resample_seed: Option<u64>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(long)]
    stratify: Option<bool>,
    #[arg(long)]
    max_features: Option<usize>,
    #[arg(long)]
    maxlen: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    eval_on_resampled: bool,
    /// Write the merged config here and exit without training.
    #[arg(long)]
    dump_config: Option<PathBuf>,
}

fn merged_config(a: &TrainArgs) -> Result<ExperimentConfig, CliError> {
    let mut c = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => {
            let model = ModelConfig::by_name(a.model.as_deref().unwrap_or("nb"))?;
            ExperimentConfig::new(PathBuf::new(), model, PathBuf::new())
        }
    };
    if let Some(m) = &a.model {
        if a.config.is_some() && m != c.model.name() {
            c.model = ModelConfig::by_name(m)?;
        }
        if a.features.is_none() {
            c.features = c.model.natural_features();
        }
    }
    if let Some(v) = &a.features {
        c.features = v.parse::<Features>()?;
    }
    if let Some(v) = &a.embedding {
        c.embedding = v.parse::<EmbeddingSpec>()?;
    }
    if let Some(v) = &a.resample {
        c.resample.mode = v
            .parse::<ResampleMode>()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    macro_rules! set {
        ($($flag:ident => $($field:ident).+;)*) => {$(
            if let Some(v) = a.$flag.clone() {
                c.$($field).+ = v;
            }
        )*};
    }
    set! {
        data => data;
        output_dir => output_dir;
        tokenizer => tokenizer;
        resample_seed => resample.seed;
        train_fraction => split.train_fraction;
        split_seed => split.seed;
        stratify => split.stratify;
        maxlen => maxlen;
        epochs => train.epochs;
        batch_size => train.batch_size;
        lr => train.lr;
        threshold => train.threshold;
        threads => train.threads;
    }
    if let Some(v) = a.max_features {
        c.max_features = Some(v);
    }
    if let Some(s) = a.seed {
        match &mut c.model {
            ModelConfig::Nb { .. } => {}
            ModelConfig::Svm(h) => h.seed = s,
            ModelConfig::Gru(h) | ModelConfig::Lstm(h) => {
                h.seed = s;
                c.train.seed = s;
            }
        }
    }
    if a.eval_on_resampled {
        c.eval_on_resampled = true;
    }
    Ok(c)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Eda {
            data,
            output_dir,
            top_k,
        } => {
            let out = pipeline::run_eda(&data, &output_dir, top_k)?;
            let d = out.distribution;
            println!(
                "{} sincere, {} insincere ({:.2}% insincere)",
                d.n_negative,
                d.n_positive,
                100.0 * d.positive_fraction
            );
            for (t, c) in out.top_tokens {
                println!("{t}\t{c}");
            }
        }
        Command::Train(args) => {
            let cfg = merged_config(&args)?;
            if let Some(p) = &args.dump_config {
                cfg.validate()?;
                std::fs::write(p, cfg.to_json()).map_err(|e| CliError::io(p.display(), e))?;
                return Ok(());
            }
            let out = pipeline::run_train(&cfg)?;
            print!("{}", out.report.to_table());
            println!("outputs in {}", cfg.output_dir.display());
        }
        Command::Evaluate {
            model,
            data,
            output_dir,
            threshold,
        } => {
            let report = pipeline::run_evaluate(&model, &data, &output_dir, threshold)?;
            print!("{}", report.to_table());
        }
        Command::Predict {
            model,
            input,
            text,
            threshold,
            output,
        } => {
            let questions = match input {
                Some(p) => read_questions(&p)?,
                None => text,
            };
            let mut buf = Vec::new();
            pipeline::run_predict(&model, &questions, threshold, &mut buf)?;
            match output {
                Some(p) => std::fs::write(&p, buf).map_err(|e| CliError::io(p.display(), e))?,
                None => std::io::stdout()
                    .write_all(&buf)
                    .map_err(|e| CliError::io("stdout", e))?,
            }
        }
        Command::Report { runs, csv } => {
            let rows = collect_runs(&runs)?;
            if csv {
                print!("{}", format_report_csv(&rows));
            } else {
                print!("{}", format_report_table(&rows));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("toxic: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
