//! Independent reference implementations used as test oracles. Each one is
//! written from the defining formula without calling the code under test.
#![allow(dead_code)]

use toxic_core::corpus::Label;
use toxic_core::eval::{ConfusionMatrix, MetricsReport};
use toxic_core::neural::{
    gru_step, lstm_step, GateParams, GruParams, LstmParams, RecurrentParams, SequenceClassifier,
    Tensor,
};
use toxic_core::rng::{self, Rng};
use toxic_core::textprep::{TokenizedDoc, Vocab, PAD_ID};
use toxic_core::vectorize::SequenceBatch;

/// Uniform index in `0..bound`.
pub fn pick(r: &mut Rng, bound: usize) -> usize {
    rng::below(r, bound as u64) as usize
}

pub const TERMS: [&str; 10] = [
    "ant", "bee", "cat", "dog", "eel", "fox", "gnu", "hen", "ibis", "jay",
];

/// Between 2 and `max_docs` documents, each with 1 to `max_terms` tokens drawn
/// from a 10-word alphabet.
pub fn random_corpus(r: &mut Rng, max_docs: usize, max_terms: usize) -> Vec<TokenizedDoc> {
    let n = 2 + pick(r, max_docs - 1);
    (0..n)
        .map(|_| {
            let len = 1 + pick(r, max_terms);
            TokenizedDoc::new((0..len).map(|_| TERMS[pick(r, TERMS.len())]))
        })
        .collect()
}

fn count(doc: &TokenizedDoc, term: &str) -> f64 {
    doc.tokens.iter().filter(|t| *t == term).count() as f64
}

/// Dense L2-normalized TF-IDF rows with smoothed idf, columns in vocab order.
pub fn tfidf_brute(
    docs: &[TokenizedDoc],
    fit_docs: &[TokenizedDoc],
    vocab: &Vocab,
) -> Vec<Vec<f64>> {
    let n = fit_docs.len() as f64;
    let idf: Vec<f64> = vocab
        .terms()
        .iter()
        .map(|t| {
            let df = fit_docs.iter().filter(|d| count(d, t) > 0.0).count() as f64;
            ((1.0 + n) / (1.0 + df)).ln() + 1.0
        })
        .collect();
    docs.iter()
        .map(|d| {
            let raw: Vec<f64> = vocab
                .terms()
                .iter()
                .zip(&idf)
                .map(|(t, w)| count(d, t) * w)
                .collect();
            let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                raw
            } else {
                raw.iter().map(|v| v / norm).collect()
            }
        })
        .collect()
}

/// Multinomial NB log joint for `query`, evaluated as the log of a product of
/// probabilities rather than a sum of logs.
pub fn nb_log_joint_brute(x: &[Vec<f64>], y: &[Label], alpha: f64, query: &[f64]) -> [f64; 2] {
    let dim = query.len();
    let mut out = [0.0; 2];
    for (c, slot) in out.iter_mut().enumerate() {
        let rows: Vec<&Vec<f64>> = x
            .iter()
            .zip(y)
            .filter(|(_, l)| l.as_u8() as usize == c)
            .map(|(r, _)| r)
            .collect();
        let prior = rows.len() as f64 / x.len() as f64;
        let per_term: Vec<f64> = (0..dim)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>())
            .collect();
        let total: f64 = per_term.iter().sum::<f64>() + alpha * dim as f64;
        let mut prod = prior;
        for j in 0..dim {
            if query[j] != 0.0 {
                prod *= ((per_term[j] + alpha) / total).powf(query[j]);
            }
        }
        *slot = prod.ln();
    }
    out
}

/// Minimum within-cluster SSE over every assignment of `points` to `k` labels.
pub fn kmeans_brute_sse(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let d = points[0].len();
    let mut best = f64::INFINITY;
    let mut labels = vec![0usize; n];
    loop {
        let mut sse = 0.0;
        for c in 0..k {
            let members: Vec<&Vec<f64>> = (0..n)
                .filter(|&i| labels[i] == c)
                .map(|i| &points[i])
                .collect();
            if members.is_empty() {
                continue;
            }
            for j in 0..d {
                let mean = members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64;
                sse += members.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>();
            }
        }
        best = best.min(sse);
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn gate(g: &GateParams, x: &[f64], h: &[f64]) -> Vec<f64> {
    let (w, u, b) = (g.w.data(), g.u.data(), g.b.data());
    let (nx, nh) = (x.len(), h.len());
    (0..b.len())
        .map(|i| {
            let mut a = b[i];
            for j in 0..nx {
                a += w[i * nx + j] * x[j];
            }
            for j in 0..nh {
                a += u[i * nh + j] * h[j];
            }
            a
        })
        .collect()
}

pub fn gru_reference(p: &GruParams, x: &[f64], h: &[f64]) -> Vec<f64> {
    let z: Vec<f64> = gate(&p.update, x, h).into_iter().map(sig).collect();
    let r: Vec<f64> = gate(&p.reset, x, h).into_iter().map(sig).collect();
    let rh: Vec<f64> = r.iter().zip(h).map(|(a, b)| a * b).collect();
    let cand: Vec<f64> = gate(&p.candidate, x, &rh)
        .into_iter()
        .map(f64::tanh)
        .collect();
    (0..h.len())
        .map(|i| (1.0 - z[i]) * h[i] + z[i] * cand[i])
        .collect()
}

pub fn lstm_reference(p: &LstmParams, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let f: Vec<f64> = gate(&p.forget, x, h).into_iter().map(sig).collect();
    let i: Vec<f64> = gate(&p.input, x, h).into_iter().map(sig).collect();
    let o: Vec<f64> = gate(&p.output, x, h).into_iter().map(sig).collect();
    let g: Vec<f64> = gate(&p.cell, x, h).into_iter().map(f64::tanh).collect();
    let c2: Vec<f64> = (0..h.len()).map(|k| f[k] * c[k] + i[k] * g[k]).collect();
    let h2: Vec<f64> = (0..h.len()).map(|k| o[k] * c2[k].tanh()).collect();
    (h2, c2)
}

fn dense(w: &Tensor, b: &Tensor, x: &[f64]) -> Vec<f64> {
    (0..b.len())
        .map(|i| {
            b.data()[i]
                + (0..x.len())
                    .map(|j| w.data()[i * x.len() + j] * x[j])
                    .sum::<f64>()
        })
        .collect()
}

fn run_direction(p: &RecurrentParams, xs: &[&[f64]], hidden: usize) -> Vec<Vec<f64>> {
    let mut h = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    let mut out = Vec::new();
    for x in xs {
        match p {
            RecurrentParams::Gru(g) => h = gru_step(g, x, &h).unwrap(),
            RecurrentParams::Lstm(l) => (h, c) = lstm_step(l, x, &h, &c).unwrap(),
        }
        out.push(h.clone());
    }
    out
}

/// Probability for one row, composed from the public cell steps: drop padding,
/// run both directions, max-pool the concatenated states, append the final
/// state of each direction, then ReLU dense and sigmoid output.
pub fn forward_reference(m: &SequenceClassifier, ids: &[usize]) -> f64 {
    let h = m.arch.hidden_dim;
    let xs: Vec<&[f64]> = ids
        .iter()
        .filter(|&&id| id != PAD_ID)
        .map(|&id| m.embedding.row(id))
        .collect();
    let fwd = run_direction(&m.forward_rnn, &xs, h);
    let rev: Vec<&[f64]> = xs.iter().rev().copied().collect();
    let mut bwd = run_direction(&m.backward_rnn, &rev, h);
    bwd.reverse();
    let mut feat = vec![0.0; 4 * h];
    if !xs.is_empty() {
        for j in 0..h {
            feat[j] = fwd.iter().map(|s| s[j]).fold(f64::NEG_INFINITY, f64::max);
            feat[h + j] = bwd.iter().map(|s| s[j]).fold(f64::NEG_INFINITY, f64::max);
            feat[2 * h + j] = fwd[fwd.len() - 1][j];
            feat[3 * h + j] = bwd[0][j];
        }
    }
    let a: Vec<f64> = dense(&m.hidden.w, &m.hidden.b, &feat)
        .into_iter()
        .map(|v| v.max(0.0))
        .collect();
    sig(dense(&m.output.w, &m.output.b, &a)[0])
}

/// Element `i` of trainable tensor `k`, counting the embedding first when it
/// is trainable.
fn element(p: &mut SequenceClassifier, k: usize, i: usize) -> &mut f64 {
    let t: &mut Tensor = if p.embedding_trainable {
        if k == 0 {
            &mut p.embedding
        } else {
            p.tensors_mut().into_iter().nth(k - 1).unwrap()
        }
    } else {
        p.tensors_mut().into_iter().nth(k).unwrap()
    };
    &mut t.data_mut()[i]
}

/// Largest relative error `|a − n| / max(|a|, |n|, 1e-6)` between analytic and
/// central-difference gradients over every element of every trainable tensor,
/// with the name of the worst tensor.
pub fn gradient_check(
    m: &SequenceClassifier,
    batch: &SequenceBatch,
    targets: &[f64],
    eps: f64,
) -> (f64, String) {
    let (_, _, g) = m.loss_and_gradients(batch, targets, None).unwrap();
    let mut analytic: Vec<(String, Vec<f64>)> = Vec::new();
    if m.embedding_trainable {
        let e = g.embedding_dense(m.embedding.rows(), m.embedding.cols());
        analytic.push(("embedding".into(), e.data().to_vec()));
    }
    for (name, t) in m.tensor_names().into_iter().zip(g.tensors()) {
        analytic.push((name, t.data().to_vec()));
    }

    let mut worst = (0.0, String::new());
    let mut probe = m.clone();
    for (k, (name, grad)) in analytic.iter().enumerate() {
        for i in 0..grad.len() {
            let orig = *element(&mut probe, k, i);
            *element(&mut probe, k, i) = orig + eps;
            let up = probe.loss(batch, targets).unwrap();
            *element(&mut probe, k, i) = orig - eps;
            let down = probe.loss(batch, targets).unwrap();
            *element(&mut probe, k, i) = orig;
            let numeric = (up - down) / (2.0 * eps);
            let a = grad[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            if rel > worst.0 {
                worst = (
                    rel,
                    format!("{name}[{i}]: analytic {a:e}, numeric {numeric:e}"),
                );
            }
        }
    }
    worst
}

/// Every report field recomputed from the four counts.
pub fn check_report(cm: &ConfusionMatrix, rep: &MetricsReport) -> Result<(), String> {
    let (tp, fn_, fp, tn) = (cm.tp as f64, cm.fn_ as f64, cm.fp as f64, cm.tn as f64);
    let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    let f1 = |p: f64, r: f64| {
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    };
    let p1 = div(tp, tp + fp);
    let r1 = div(tp, tp + fn_);
    let p0 = div(tn, tn + fn_);
    let r0 = div(tn, tn + fp);
    let (f0, f1v) = (f1(p0, r0), f1(p1, r1));
    let (s0, s1) = (tn + fp, tp + fn_);
    let w = |a: f64, b: f64| (s0 * a + s1 * b) / (s0 + s1);
    let expect = [
        ("accuracy", (tp + tn) / (tp + tn + fp + fn_), rep.accuracy),
        ("p0", p0, rep.per_class[0].precision),
        ("r0", r0, rep.per_class[0].recall),
        ("f0", f0, rep.per_class[0].f1),
        ("p1", p1, rep.per_class[1].precision),
        ("r1", r1, rep.per_class[1].recall),
        ("f1", f1v, rep.per_class[1].f1),
        ("macro_p", (p0 + p1) / 2.0, rep.macro_avg.precision),
        ("macro_r", (r0 + r1) / 2.0, rep.macro_avg.recall),
        ("macro_f1", (f0 + f1v) / 2.0, rep.macro_avg.f1),
        ("weighted_p", w(p0, p1), rep.weighted_avg.precision),
        ("weighted_r", w(r0, r1), rep.weighted_avg.recall),
        ("weighted_f1", w(f0, f1v), rep.weighted_avg.f1),
    ];
    for (name, want, got) in expect {
        if want != got {
            return Err(format!("{name}: expected {want}, got {got} for {cm:?}"));
        }
    }
    if rep.per_class[0].support != cm.tn + cm.fp || rep.per_class[1].support != cm.tp + cm.fn_ {
        return Err(format!("support mismatch for {cm:?}"));
    }
    Ok(())
}

/// 32 distinct random sequences over ids 2..12 with random labels, 16 of each
/// class, padded to length 6.
pub fn memorization_set(seed: u64) -> (SequenceBatch, Vec<Label>) {
    let mut r = rng::seeded(seed);
    let mut seen = std::collections::BTreeSet::new();
    let mut ids = Vec::new();
    while seen.len() < 32 {
        let len = 3 + pick(&mut r, 4);
        let mut row = vec![0usize; 6 - len];
        row.extend((0..len).map(|_| 2 + pick(&mut r, 10)));
        if seen.insert(row.clone()) {
            ids.extend(row);
        }
    }
    let mut labels: Vec<Label> = (0..32).map(|i| Label::from_bool(i < 16)).collect();
    rng::shuffle(&mut labels, &mut r);
    (SequenceBatch::from_ids(ids, 6), labels)
}
