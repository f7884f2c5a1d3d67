use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::adam::{adam_update, AdamConfig, AdamState};
use super::model::SequenceClassifier;
use super::{NeuralError, Tensor};
use crate::corpus::Label;
use crate::rng;
use crate::vectorize::SequenceBatch;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// A row is labelled positive when its probability is strictly above this.
    pub threshold: f64,
    pub seed: u64,
    /// Worker threads for per-row forward/backward. 1 runs inline.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let a = AdamConfig::default();
        TrainConfig {
            batch_size: 512,
            epochs: 5,
            lr: a.lr,
            beta1: a.beta1,
            beta2: a.beta2,
            eps: a.eps,
            threshold: 0.5,
            seed: 0,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: &str| Err(NeuralError::Config(m.into()));
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be a positive number");
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return bad("beta1 and beta2 must lie in [0, 1)");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be > 0");
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad("threshold must lie in [0, 1]");
        }
        if self.threads == 0 {
            return bad("threads must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: Option<f64>,
    pub val_acc: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }

    /// `epoch,train_loss,train_acc,val_loss,val_acc`; validation cells are empty
    /// when no validation set was given.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from("epoch,train_loss,train_acc,val_loss,val_acc\n");
        for r in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.epoch,
                r.train_loss,
                r.train_acc,
                opt(r.val_loss),
                opt(r.val_acc)
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())
    }
}

/// Fraction of rows where `p > threshold` agrees with the target.
pub fn accuracy_at(p: &[f64], y: &[f64], threshold: f64) -> f64 {
    if p.is_empty() {
        return 0.0;
    }
    let hits = p
        .iter()
        .zip(y)
        .filter(|(p, y)| (**p > threshold) == (**y > 0.5))
        .count();
    hits as f64 / p.len() as f64
}

fn targets(labels: &[Label]) -> Vec<f64> {
    labels.iter().map(|l| l.as_u8() as f64).collect()
}

/// Minibatch Adam on mean BCE.
///
/// Each epoch shuffles the training rows with a generator seeded from
/// `cfg.seed`, then steps once per batch. Training loss and accuracy are the
/// row-weighted means over the epoch's batches, measured before each step.
/// Results do not depend on `cfg.threads`.
///
/// A non-finite loss aborts with its epoch (from 1) and batch index (from 0).
pub fn train(
    mut m: SequenceClassifier,
    train: (&SequenceBatch, &[Label]),
    val: Option<(&SequenceBatch, &[Label])>,
    cfg: &TrainConfig,
) -> Result<(SequenceClassifier, TrainHistory), NeuralError> {
    cfg.validate()?;
    let (x, labels) = train;
    if x.rows() != labels.len() {
        return Err(NeuralError::Shape(format!(
            "{} rows but {} labels",
            x.rows(),
            labels.len()
        )));
    }
    if x.is_empty() {
        return Err(NeuralError::Empty);
    }
    let y = targets(labels);
    let val = match val {
        Some((vx, vl)) if vx.rows() != vl.len() => {
            return Err(NeuralError::Shape(format!(
                "{} validation rows but {} labels",
                vx.rows(),
                vl.len()
            )))
        }
        Some((vx, vl)) => Some((vx, targets(vl))),
        None => None,
    };
    let pool = if cfg.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build()
                .map_err(|e| NeuralError::Config(e.to_string()))?,
        )
    } else {
        None
    };

    let rows = m.embedding.rows();
    let dim = m.embedding.cols();
    let trainable = m.embedding_trainable;
    let mut state = {
        let mut params = Vec::new();
        if trainable {
            params.push(&m.embedding);
        }
        params.extend(m.tensors());
        AdamState::new(cfg.adam(), &params)
    };

    let mut r = rng::seeded(cfg.seed);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut history = TrainHistory::default();

    for epoch in 1..=cfg.epochs {
        rng::shuffle(&mut order, &mut r);
        let mut loss_sum = 0.0;
        let mut hits = 0.0;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let bx = x.select(idx);
            let by: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
            let (loss, probs, grads) = m.loss_and_gradients(&bx, &by, pool.as_ref())?;
            if !loss.is_finite() {
                return Err(NeuralError::NonFinite { epoch, batch: b });
            }
            loss_sum += loss * idx.len() as f64;
            hits += accuracy_at(&probs, &by, cfg.threshold) * idx.len() as f64;

            let emb_grad: Option<Tensor> = trainable.then(|| grads.embedding_dense(rows, dim));
            let mut g: Vec<&Tensor> = Vec::new();
            if let Some(e) = &emb_grad {
                g.push(e);
            }
            g.extend(grads.tensors());
            let mut params: Vec<&mut Tensor> = Vec::new();
            let SequenceClassifier {
                embedding,
                forward_rnn,
                backward_rnn,
                hidden,
                output,
                ..
            } = &mut m;
            if trainable {
                params.push(embedding);
            }
            params.extend(forward_rnn.tensors_mut());
            params.extend(backward_rnn.tensors_mut());
            params.extend([&mut hidden.w, &mut hidden.b, &mut output.w, &mut output.b]);
            adam_update(&mut state, &mut params, &g);
            if !m.is_finite() {
                return Err(NeuralError::NonFinite { epoch, batch: b });
            }
        }
        let n = x.rows() as f64;
        let (val_loss, val_acc) = match &val {
            Some((vx, vy)) if !vx.is_empty() => {
                let p = m.forward_par(vx, pool.as_ref())?;
                let l = super::bce_loss(&p, vy);
                if !l.is_finite() {
                    return Err(NeuralError::NonFinite { epoch, batch: 0 });
                }
                (Some(l), Some(accuracy_at(&p, vy, cfg.threshold)))
            }
            _ => (None, None),
        };
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / n,
            train_acc: hits / n,
            val_loss,
            val_acc,
        });
    }
    Ok((m, history))
}
