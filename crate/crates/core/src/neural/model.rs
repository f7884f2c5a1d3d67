//! Bidirectional recurrent sequence classifier.
//!
//! ```text
//! ids → embedding → forward & backward GRU/LSTM over the real (non-padding) steps
//!     → [max-pool over time of (h_fwd ‖ h_bwd), h_fwd at last step, h_bwd at first step]
//!     → dense + ReLU → dense + sigmoid
//! ```
//!
//! Padding positions are skipped entirely: the recurrences start from a zero
//! state at the first real token, so leading padding never changes the output.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cell::{glorot, sigmoid, GruParams, LstmParams, RecurrentParams, StepCache};
use super::loss::bce_loss;
use super::{NeuralError, Tensor};
use crate::rng;
use crate::textprep::PAD_ID;
use crate::vectorize::SequenceBatch;

/// Rows per gradient-accumulation chunk. Chunk boundaries depend only on the
/// batch, so summed gradients are identical for any thread count.
const CHUNK_ROWS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Gru,
    Lstm,
}

impl std::fmt::Display for CellKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CellKind::Gru => "gru",
            CellKind::Lstm => "lstm",
        })
    }
}

/// Layer sizes of a [`SequenceClassifier`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub cell: CellKind,
    pub vocab_rows: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub dense_dim: usize,
}

impl Architecture {
    /// Width of the pooled feature vector fed to the dense layer.
    pub fn feature_dim(&self) -> usize {
        4 * self.hidden_dim
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub w: Tensor,
    pub b: Tensor,
}

impl Dense {
    fn zeros(input: usize, output: usize) -> Self {
        Dense {
            w: Tensor::zeros(&[output, input]),
            b: Tensor::zeros(&[output]),
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.b.data().to_vec();
        self.w.matvec_acc(x, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceClassifier {
    pub arch: Architecture,
    pub embedding: Tensor,
    pub embedding_trainable: bool,
    pub forward_rnn: RecurrentParams,
    pub backward_rnn: RecurrentParams,
    pub hidden: Dense,
    pub output: Dense,
}

/// Gradients shaped like the trainable parameters of a [`SequenceClassifier`].
/// Embedding gradients are sparse by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embedding: BTreeMap<usize, Vec<f64>>,
    pub forward_rnn: RecurrentParams,
    pub backward_rnn: RecurrentParams,
    pub hidden: Dense,
    pub output: Dense,
}

impl Gradients {
    fn zeros_for(m: &SequenceClassifier) -> Self {
        Gradients {
            embedding: BTreeMap::new(),
            forward_rnn: m.forward_rnn.zeros_like(),
            backward_rnn: m.backward_rnn.zeros_like(),
            hidden: Dense::zeros(m.hidden.w.cols(), m.hidden.w.rows()),
            output: Dense::zeros(m.output.w.cols(), m.output.w.rows()),
        }
    }

    /// Dense tensors in the order of [`SequenceClassifier::tensors`].
    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut v = self.forward_rnn.tensors();
        v.extend(self.backward_rnn.tensors());
        v.extend([
            &self.hidden.w,
            &self.hidden.b,
            &self.output.w,
            &self.output.b,
        ]);
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.forward_rnn.tensors_mut();
        v.extend(self.backward_rnn.tensors_mut());
        v.extend([
            &mut self.hidden.w,
            &mut self.hidden.b,
            &mut self.output.w,
            &mut self.output.b,
        ]);
        v
    }

    fn add(&mut self, other: &Gradients) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_assign(b);
        }
        for (row, g) in &other.embedding {
            let slot = self
                .embedding
                .entry(*row)
                .or_insert_with(|| vec![0.0; g.len()]);
            for (s, v) in slot.iter_mut().zip(g) {
                *s += v;
            }
        }
    }

    /// Embedding gradient as a dense `rows × dim` tensor.
    pub fn embedding_dense(&self, rows: usize, dim: usize) -> Tensor {
        let mut t = Tensor::zeros(&[rows, dim]);
        for (r, g) in &self.embedding {
            t.row_mut(*r).copy_from_slice(g);
        }
        t
    }
}

struct RowCache {
    start: usize,
    fwd: Vec<StepCache>,
    bwd: Vec<StepCache>,
    /// Step index (relative to `start`) that won the max-pool, per pooled unit.
    argmax: Vec<usize>,
    feat: Vec<f64>,
    z1: Vec<f64>,
    a1: Vec<f64>,
    p: f64,
}

impl SequenceClassifier {
    /// Fresh model around an embedding matrix (row 0 is padding).
    ///
    /// Recurrent and dense weights are Glorot-uniform from `seed`; biases start at
    /// zero except the LSTM forget gate (1).
    pub fn new(
        cell: CellKind,
        embedding: Tensor,
        embedding_trainable: bool,
        hidden_dim: usize,
        dense_dim: usize,
        seed: u64,
    ) -> Self {
        let arch = Architecture {
            cell,
            vocab_rows: embedding.rows(),
            embed_dim: embedding.cols(),
            hidden_dim,
            dense_dim,
        };
        let mut r = rng::seeded(seed);
        let d = arch.embed_dim;
        let make = |r: &mut rng::Rng| match cell {
            CellKind::Gru => RecurrentParams::Gru(GruParams::init(d, hidden_dim, r)),
            CellKind::Lstm => RecurrentParams::Lstm(LstmParams::init(d, hidden_dim, r)),
        };
        let forward_rnn = make(&mut r);
        let backward_rnn = make(&mut r);
        let f = arch.feature_dim();
        let hidden = Dense {
            w: glorot(&[dense_dim, f], f, dense_dim, &mut r),
            b: Tensor::zeros(&[dense_dim]),
        };
        let output = Dense {
            w: glorot(&[1, dense_dim], dense_dim, 1, &mut r),
            b: Tensor::zeros(&[1]),
        };
        SequenceClassifier {
            arch,
            embedding,
            embedding_trainable,
            forward_rnn,
            backward_rnn,
            hidden,
            output,
        }
    }

    /// Dense (non-embedding) parameters in a fixed order.
    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut v = self.forward_rnn.tensors();
        v.extend(self.backward_rnn.tensors());
        v.extend([
            &self.hidden.w,
            &self.hidden.b,
            &self.output.w,
            &self.output.b,
        ]);
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.forward_rnn.tensors_mut();
        v.extend(self.backward_rnn.tensors_mut());
        v.extend([
            &mut self.hidden.w,
            &mut self.hidden.b,
            &mut self.output.w,
            &mut self.output.b,
        ]);
        v
    }

    /// Names matching [`Self::tensors`], for diagnostics.
    pub fn tensor_names(&self) -> Vec<String> {
        let gates: &[&str] = match self.arch.cell {
            CellKind::Gru => &["update", "reset", "candidate"],
            CellKind::Lstm => &["forget", "input", "output", "cell"],
        };
        let mut names = Vec::new();
        for dir in ["fwd", "bwd"] {
            for g in gates {
                for p in ["w", "u", "b"] {
                    names.push(format!("{dir}.{g}.{p}"));
                }
            }
        }
        names.extend(["hidden.w", "hidden.b", "output.w", "output.b"].map(String::from));
        names
    }

    pub fn is_finite(&self) -> bool {
        self.embedding.is_finite() && self.tensors().iter().all(|t| t.is_finite())
    }

    fn check_ids(&self, batch: &SequenceBatch) -> Result<(), NeuralError> {
        match batch.max_id() {
            Some(id) if id >= self.embedding.rows() => Err(NeuralError::IdOutOfRange {
                id,
                rows: self.embedding.rows(),
            }),
            _ => Ok(()),
        }
    }

    fn forward_row(&self, ids: &[usize]) -> RowCache {
        let h = self.arch.hidden_dim;
        let start = ids.iter().position(|&id| id != PAD_ID).unwrap_or(ids.len());
        let steps = &ids[start..];
        let len = steps.len();
        let zeros = vec![0.0; h];

        let mut fwd: Vec<StepCache> = Vec::with_capacity(len);
        for &id in steps {
            let (hp, cp) = fwd
                .last()
                .map_or((&zeros[..], &zeros[..]), |c| (c.h(), c.c()));
            let next = self.forward_rnn.step(self.embedding.row(id), hp, cp);
            fwd.push(next);
        }
        let mut bwd_rev: Vec<StepCache> = Vec::with_capacity(len);
        for &id in steps.iter().rev() {
            let (hp, cp) = bwd_rev
                .last()
                .map_or((&zeros[..], &zeros[..]), |c| (c.h(), c.c()));
            let next = self.backward_rnn.step(self.embedding.row(id), hp, cp);
            bwd_rev.push(next);
        }
        bwd_rev.reverse();
        let bwd = bwd_rev;

        let mut feat = vec![0.0; 4 * h];
        let mut argmax = vec![0usize; 2 * h];
        if len > 0 {
            for j in 0..2 * h {
                let val = |k: usize| {
                    if j < h {
                        fwd[k].h()[j]
                    } else {
                        bwd[k].h()[j - h]
                    }
                };
                let mut best = (0, val(0));
                for k in 1..len {
                    let v = val(k);
                    if v > best.1 {
                        best = (k, v);
                    }
                }
                argmax[j] = best.0;
                feat[j] = best.1;
            }
            feat[2 * h..3 * h].copy_from_slice(fwd[len - 1].h());
            feat[3 * h..].copy_from_slice(bwd[0].h());
        }

        let z1 = self.hidden.forward(&feat);
        let a1: Vec<f64> = z1.iter().map(|v| v.max(0.0)).collect();
        let logit = self.output.forward(&a1)[0];
        RowCache {
            start,
            fwd,
            bwd,
            argmax,
            feat,
            z1,
            a1,
            p: sigmoid(logit),
        }
    }

    fn backward_row(&self, ids: &[usize], cache: &RowCache, dlogit: f64, g: &mut Gradients) {
        let h = self.arch.hidden_dim;
        let d = self.arch.embed_dim;

        g.output.w.outer_acc(&[dlogit], &cache.a1);
        g.output.b.acc(&[dlogit]);
        let mut da1 = vec![0.0; self.arch.dense_dim];
        self.output.w.matvec_t_acc(&[dlogit], &mut da1);
        let dz1: Vec<f64> = da1
            .iter()
            .zip(&cache.z1)
            .map(|(d, z)| if *z > 0.0 { *d } else { 0.0 })
            .collect();
        g.hidden.w.outer_acc(&dz1, &cache.feat);
        g.hidden.b.acc(&dz1);
        let mut dfeat = vec![0.0; 4 * h];
        self.hidden.w.matvec_t_acc(&dz1, &mut dfeat);

        let len = cache.fwd.len();
        if len == 0 {
            return;
        }
        let mut dhf = vec![vec![0.0; h]; len];
        let mut dhb = vec![vec![0.0; h]; len];
        for j in 0..2 * h {
            let k = cache.argmax[j];
            if j < h {
                dhf[k][j] += dfeat[j];
            } else {
                dhb[k][j - h] += dfeat[j];
            }
        }
        for j in 0..h {
            dhf[len - 1][j] += dfeat[2 * h + j];
            dhb[0][j] += dfeat[3 * h + j];
        }

        let steps = &ids[cache.start..];
        let mut dx_rows = vec![vec![0.0; d]; len];

        // forward direction: time runs 0..len, so backprop from the end
        let mut dh = vec![0.0; h];
        let mut dc = vec![0.0; h];
        for k in (0..len).rev() {
            for (a, b) in dh.iter_mut().zip(&dhf[k]) {
                *a += b;
            }
            let x = self.embedding.row(steps[k]);
            self.forward_rnn.step_backward(
                &mut g.forward_rnn,
                &cache.fwd[k],
                x,
                &mut dh,
                &mut dc,
                &mut dx_rows[k],
            );
        }

        // backward direction: time runs len-1..=0, so backprop from step 0
        dh.iter_mut().for_each(|v| *v = 0.0);
        dc.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..len {
            for (a, b) in dh.iter_mut().zip(&dhb[k]) {
                *a += b;
            }
            let x = self.embedding.row(steps[k]);
            self.backward_rnn.step_backward(
                &mut g.backward_rnn,
                &cache.bwd[k],
                x,
                &mut dh,
                &mut dc,
                &mut dx_rows[k],
            );
        }

        if self.embedding_trainable {
            for (k, dx) in dx_rows.into_iter().enumerate() {
                let slot = g.embedding.entry(steps[k]).or_insert_with(|| vec![0.0; d]);
                for (s, v) in slot.iter_mut().zip(dx) {
                    *s += v;
                }
            }
        }
    }

    /// Positive-class probability per row.
    pub fn forward(&self, batch: &SequenceBatch) -> Result<Vec<f64>, NeuralError> {
        self.forward_par(batch, None)
    }

    pub fn forward_par(
        &self,
        batch: &SequenceBatch,
        pool: Option<&rayon::ThreadPool>,
    ) -> Result<Vec<f64>, NeuralError> {
        self.check_ids(batch)?;
        let run = || -> Vec<f64> {
            match pool {
                Some(_) => (0..batch.rows())
                    .into_par_iter()
                    .map(|r| self.forward_row(batch.row(r)).p)
                    .collect(),
                None => (0..batch.rows())
                    .map(|r| self.forward_row(batch.row(r)).p)
                    .collect(),
            }
        };
        Ok(match pool {
            Some(p) => p.install(run),
            None => run(),
        })
    }

    /// Mean BCE over `rows` of `batch` against `targets` (0/1 as reals).
    pub fn loss(&self, batch: &SequenceBatch, targets: &[f64]) -> Result<f64, NeuralError> {
        let p = self.forward(batch)?;
        Ok(bce_loss(&p, targets))
    }

    /// Mean BCE, per-row probabilities and exact gradients over the rows of `batch`.
    ///
    /// The logit gradient is `(p − y) / n`, the derivative of the unclamped loss;
    /// it coincides with the clamped loss everywhere the clamp is inactive.
    pub fn loss_and_gradients(
        &self,
        batch: &SequenceBatch,
        targets: &[f64],
        pool: Option<&rayon::ThreadPool>,
    ) -> Result<(f64, Vec<f64>, Gradients), NeuralError> {
        self.check_ids(batch)?;
        if targets.len() != batch.rows() {
            return Err(NeuralError::Shape(format!(
                "{} targets for {} rows",
                targets.len(),
                batch.rows()
            )));
        }
        let n = batch.rows().max(1) as f64;
        let chunks: Vec<std::ops::Range<usize>> = (0..batch.rows())
            .step_by(CHUNK_ROWS)
            .map(|s| s..(s + CHUNK_ROWS).min(batch.rows()))
            .collect();
        let work = |range: &std::ops::Range<usize>| {
            let mut g = Gradients::zeros_for(self);
            let mut probs = Vec::with_capacity(range.len());
            for r in range.clone() {
                let ids = batch.row(r);
                let cache = self.forward_row(ids);
                self.backward_row(ids, &cache, (cache.p - targets[r]) / n, &mut g);
                probs.push(cache.p);
            }
            (probs, g)
        };
        let parts: Vec<(Vec<f64>, Gradients)> = match pool {
            Some(p) => p.install(|| chunks.par_iter().map(work).collect()),
            None => chunks.iter().map(work).collect(),
        };
        let mut total = Gradients::zeros_for(self);
        let mut probs = Vec::with_capacity(batch.rows());
        for (p, g) in &parts {
            total.add(g);
            probs.extend_from_slice(p);
        }
        let loss = bce_loss(&probs, targets);
        Ok((loss, probs, total))
    }
}

/// Positive-class probability for every row of `batch`.
pub fn model_forward(
    m: &SequenceClassifier,
    batch: &SequenceBatch,
) -> Result<Vec<f64>, NeuralError> {
    m.forward(batch)
}
