//! GRU and LSTM cells: single-step forward passes with cached activations and
//! their exact backward passes.
//!
//! GRU convention:
//!
//! ```text
//! z  = σ(W_z x + U_z h + b_z)
//! r  = σ(W_r x + U_r h + b_r)
//! h̃  = tanh(W_h x + U_h (r ⊙ h) + b_h)
//! h' = (1 − z) ⊙ h + z ⊙ h̃
//! ```
//!
//! LSTM: `f, i, o = σ(·)`, `g = tanh(·)`, `c' = f ⊙ c + i ⊙ g`, `h' = o ⊙ tanh(c')`.

use serde::{Deserialize, Serialize};

use super::{NeuralError, Tensor};
use crate::rng::{self, Rng};

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn glorot(shape: &[usize], fan_in: usize, fan_out: usize, r: &mut Rng) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n = shape.iter().product();
    Tensor::from_vec(
        shape,
        (0..n).map(|_| limit * (2.0 * rng::unit(r) - 1.0)).collect(),
    )
}

/// Input weights `w` (`hidden × input`), recurrent weights `u` (`hidden × hidden`), bias `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    pub w: Tensor,
    pub u: Tensor,
    pub b: Tensor,
}

impl GateParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        GateParams {
            w: Tensor::zeros(&[hidden_dim, input_dim]),
            u: Tensor::zeros(&[hidden_dim, hidden_dim]),
            b: Tensor::zeros(&[hidden_dim]),
        }
    }

    fn init(input_dim: usize, hidden_dim: usize, bias: f64, r: &mut Rng) -> Self {
        let mut b = Tensor::zeros(&[hidden_dim]);
        b.fill(bias);
        GateParams {
            w: glorot(&[hidden_dim, input_dim], input_dim, hidden_dim, r),
            u: glorot(&[hidden_dim, hidden_dim], hidden_dim, hidden_dim, r),
            b,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.b.len()
    }

    /// `W x + U h + b`.
    fn affine(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        let mut a = self.b.data().to_vec();
        self.w.matvec_acc(x, &mut a);
        self.u.matvec_acc(h, &mut a);
        a
    }

    /// Accumulates parameter gradients for pre-activation gradient `da` and
    /// propagates into `dx` and `dh`.
    fn backprop(
        &self,
        grad: &mut GateParams,
        da: &[f64],
        x: &[f64],
        h: &[f64],
        dx: &mut [f64],
        dh: &mut [f64],
    ) {
        grad.w.outer_acc(da, x);
        grad.u.outer_acc(da, h);
        grad.b.acc(da);
        self.w.matvec_t_acc(da, dx);
        self.u.matvec_t_acc(da, dh);
    }

    fn tensors(&self) -> [&Tensor; 3] {
        [&self.w, &self.u, &self.b]
    }

    fn tensors_mut(&mut self) -> [&mut Tensor; 3] {
        [&mut self.w, &mut self.u, &mut self.b]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruParams {
    pub update: GateParams,
    pub reset: GateParams,
    pub candidate: GateParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub forget: GateParams,
    pub input: GateParams,
    pub output: GateParams,
    pub cell: GateParams,
}

impl GruParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        GruParams {
            update: GateParams::zeros(input_dim, hidden_dim),
            reset: GateParams::zeros(input_dim, hidden_dim),
            candidate: GateParams::zeros(input_dim, hidden_dim),
        }
    }

    pub fn init(input_dim: usize, hidden_dim: usize, r: &mut Rng) -> Self {
        GruParams {
            update: GateParams::init(input_dim, hidden_dim, 0.0, r),
            reset: GateParams::init(input_dim, hidden_dim, 0.0, r),
            candidate: GateParams::init(input_dim, hidden_dim, 0.0, r),
        }
    }

    fn gates(&self) -> [&GateParams; 3] {
        [&self.update, &self.reset, &self.candidate]
    }

    fn gates_mut(&mut self) -> [&mut GateParams; 3] {
        [&mut self.update, &mut self.reset, &mut self.candidate]
    }
}

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        LstmParams {
            forget: GateParams::zeros(input_dim, hidden_dim),
            input: GateParams::zeros(input_dim, hidden_dim),
            output: GateParams::zeros(input_dim, hidden_dim),
            cell: GateParams::zeros(input_dim, hidden_dim),
        }
    }

    /// Glorot-uniform weights, zero biases except a forget-gate bias of 1.
    pub fn init(input_dim: usize, hidden_dim: usize, r: &mut Rng) -> Self {
        LstmParams {
            forget: GateParams::init(input_dim, hidden_dim, 1.0, r),
            input: GateParams::init(input_dim, hidden_dim, 0.0, r),
            output: GateParams::init(input_dim, hidden_dim, 0.0, r),
            cell: GateParams::init(input_dim, hidden_dim, 0.0, r),
        }
    }

    fn gates(&self) -> [&GateParams; 4] {
        [&self.forget, &self.input, &self.output, &self.cell]
    }

    fn gates_mut(&mut self) -> [&mut GateParams; 4] {
        [
            &mut self.forget,
            &mut self.input,
            &mut self.output,
            &mut self.cell,
        ]
    }
}

/// Parameters of one recurrent direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RecurrentParams {
    Gru(GruParams),
    Lstm(LstmParams),
}

impl RecurrentParams {
    pub fn zeros_like(&self) -> Self {
        match self {
            RecurrentParams::Gru(p) => RecurrentParams::Gru(GruParams::zeros(
                p.update.input_dim(),
                p.update.hidden_dim(),
            )),
            RecurrentParams::Lstm(p) => RecurrentParams::Lstm(LstmParams::zeros(
                p.forget.input_dim(),
                p.forget.hidden_dim(),
            )),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            RecurrentParams::Gru(p) => p.update.input_dim(),
            RecurrentParams::Lstm(p) => p.forget.input_dim(),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        match self {
            RecurrentParams::Gru(p) => p.update.hidden_dim(),
            RecurrentParams::Lstm(p) => p.forget.hidden_dim(),
        }
    }

    /// Parameter tensors in a fixed order (per gate: `w`, `u`, `b`).
    pub fn tensors(&self) -> Vec<&Tensor> {
        match self {
            RecurrentParams::Gru(p) => p
                .gates()
                .into_iter()
                .flat_map(GateParams::tensors)
                .collect(),
            RecurrentParams::Lstm(p) => p
                .gates()
                .into_iter()
                .flat_map(GateParams::tensors)
                .collect(),
        }
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            RecurrentParams::Gru(p) => p
                .gates_mut()
                .into_iter()
                .flat_map(GateParams::tensors_mut)
                .collect(),
            RecurrentParams::Lstm(p) => p
                .gates_mut()
                .into_iter()
                .flat_map(GateParams::tensors_mut)
                .collect(),
        }
    }

    /// Forward step with cached activations; `c_prev` is ignored for GRU.
    pub(crate) fn step(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> StepCache {
        match self {
            RecurrentParams::Gru(p) => StepCache::Gru(gru_forward(p, x, h_prev)),
            RecurrentParams::Lstm(p) => StepCache::Lstm(lstm_forward(p, x, h_prev, c_prev)),
        }
    }

    /// Backward step. `dh`/`dc` are gradients w.r.t. this step's outputs; on
    /// return they hold the gradients w.r.t. the previous state. `dx` is accumulated.
    pub(crate) fn step_backward(
        &self,
        grad: &mut RecurrentParams,
        cache: &StepCache,
        x: &[f64],
        dh: &mut Vec<f64>,
        dc: &mut Vec<f64>,
        dx: &mut [f64],
    ) {
        match (self, grad, cache) {
            (RecurrentParams::Gru(p), RecurrentParams::Gru(g), StepCache::Gru(c)) => {
                *dh = gru_backward(p, g, c, x, dh, dx);
            }
            (RecurrentParams::Lstm(p), RecurrentParams::Lstm(g), StepCache::Lstm(c)) => {
                let (dh_prev, dc_prev) = lstm_backward(p, g, c, x, dh, dc, dx);
                *dh = dh_prev;
                *dc = dc_prev;
            }
            _ => unreachable!("gradient and cache match the cell type"),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct GruCache {
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    rh: Vec<f64>,
    cand: Vec<f64>,
    pub h: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct LstmCache {
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    f: Vec<f64>,
    i: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
    tanh_c: Vec<f64>,
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) enum StepCache {
    Gru(GruCache),
    Lstm(LstmCache),
}

impl StepCache {
    pub fn h(&self) -> &[f64] {
        match self {
            StepCache::Gru(c) => &c.h,
            StepCache::Lstm(c) => &c.h,
        }
    }

    pub fn c(&self) -> &[f64] {
        match self {
            StepCache::Gru(_) => &[],
            StepCache::Lstm(c) => &c.c,
        }
    }
}

fn gru_forward(p: &GruParams, x: &[f64], h_prev: &[f64]) -> GruCache {
    let z: Vec<f64> = p
        .update
        .affine(x, h_prev)
        .into_iter()
        .map(sigmoid)
        .collect();
    let r: Vec<f64> = p.reset.affine(x, h_prev).into_iter().map(sigmoid).collect();
    let rh: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
    let cand: Vec<f64> = p
        .candidate
        .affine(x, &rh)
        .into_iter()
        .map(f64::tanh)
        .collect();
    let h = (0..h_prev.len())
        .map(|k| (1.0 - z[k]) * h_prev[k] + z[k] * cand[k])
        .collect();
    GruCache {
        h_prev: h_prev.to_vec(),
        z,
        r,
        rh,
        cand,
        h,
    }
}

fn gru_backward(
    p: &GruParams,
    g: &mut GruParams,
    c: &GruCache,
    x: &[f64],
    dh: &[f64],
    dx: &mut [f64],
) -> Vec<f64> {
    let n = dh.len();
    let mut dh_prev: Vec<f64> = (0..n).map(|k| dh[k] * (1.0 - c.z[k])).collect();

    let da_cand: Vec<f64> = (0..n)
        .map(|k| dh[k] * c.z[k] * (1.0 - c.cand[k] * c.cand[k]))
        .collect();
    let mut drh = vec![0.0; n];
    p.candidate
        .backprop(&mut g.candidate, &da_cand, x, &c.rh, dx, &mut drh);

    let da_r: Vec<f64> = (0..n)
        .map(|k| {
            dh_prev[k] += drh[k] * c.r[k];
            drh[k] * c.h_prev[k] * c.r[k] * (1.0 - c.r[k])
        })
        .collect();
    p.reset
        .backprop(&mut g.reset, &da_r, x, &c.h_prev, dx, &mut dh_prev);

    let da_z: Vec<f64> = (0..n)
        .map(|k| dh[k] * (c.cand[k] - c.h_prev[k]) * c.z[k] * (1.0 - c.z[k]))
        .collect();
    p.update
        .backprop(&mut g.update, &da_z, x, &c.h_prev, dx, &mut dh_prev);
    dh_prev
}

fn lstm_forward(p: &LstmParams, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> LstmCache {
    let f: Vec<f64> = p
        .forget
        .affine(x, h_prev)
        .into_iter()
        .map(sigmoid)
        .collect();
    let i: Vec<f64> = p.input.affine(x, h_prev).into_iter().map(sigmoid).collect();
    let o: Vec<f64> = p
        .output
        .affine(x, h_prev)
        .into_iter()
        .map(sigmoid)
        .collect();
    let g: Vec<f64> = p
        .cell
        .affine(x, h_prev)
        .into_iter()
        .map(f64::tanh)
        .collect();
    let c: Vec<f64> = (0..h_prev.len())
        .map(|k| f[k] * c_prev[k] + i[k] * g[k])
        .collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h = (0..h_prev.len()).map(|k| o[k] * tanh_c[k]).collect();
    LstmCache {
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        f,
        i,
        o,
        g,
        tanh_c,
        h,
        c,
    }
}

fn lstm_backward(
    p: &LstmParams,
    gr: &mut LstmParams,
    c: &LstmCache,
    x: &[f64],
    dh: &[f64],
    dc_next: &[f64],
    dx: &mut [f64],
) -> (Vec<f64>, Vec<f64>) {
    let n = dh.len();
    let dc: Vec<f64> = (0..n)
        .map(|k| dc_next[k] + dh[k] * c.o[k] * (1.0 - c.tanh_c[k] * c.tanh_c[k]))
        .collect();
    let da_o: Vec<f64> = (0..n)
        .map(|k| dh[k] * c.tanh_c[k] * c.o[k] * (1.0 - c.o[k]))
        .collect();
    let da_f: Vec<f64> = (0..n)
        .map(|k| dc[k] * c.c_prev[k] * c.f[k] * (1.0 - c.f[k]))
        .collect();
    let da_i: Vec<f64> = (0..n)
        .map(|k| dc[k] * c.g[k] * c.i[k] * (1.0 - c.i[k]))
        .collect();
    let da_g: Vec<f64> = (0..n)
        .map(|k| dc[k] * c.i[k] * (1.0 - c.g[k] * c.g[k]))
        .collect();
    let dc_prev = (0..n).map(|k| dc[k] * c.f[k]).collect();

    let mut dh_prev = vec![0.0; n];
    p.forget
        .backprop(&mut gr.forget, &da_f, x, &c.h_prev, dx, &mut dh_prev);
    p.input
        .backprop(&mut gr.input, &da_i, x, &c.h_prev, dx, &mut dh_prev);
    p.output
        .backprop(&mut gr.output, &da_o, x, &c.h_prev, dx, &mut dh_prev);
    p.cell
        .backprop(&mut gr.cell, &da_g, x, &c.h_prev, dx, &mut dh_prev);
    (dh_prev, dc_prev)
}

fn check_gate(p: &GateParams, x: &[f64], h: &[f64]) -> Result<(), NeuralError> {
    let hd = p.hidden_dim();
    let ok = p.w.shape() == [hd, x.len()] && p.u.shape() == [hd, hd] && h.len() == hd;
    if ok {
        Ok(())
    } else {
        Err(NeuralError::Shape(format!(
            "gate expects input {} / hidden {hd}, got input {} / hidden {}",
            p.input_dim(),
            x.len(),
            h.len()
        )))
    }
}

/// One GRU step: returns `h_t`.
pub fn gru_step(p: &GruParams, x: &[f64], h_prev: &[f64]) -> Result<Vec<f64>, NeuralError> {
    for g in p.gates() {
        check_gate(g, x, h_prev)?;
    }
    Ok(gru_forward(p, x, h_prev).h)
}

/// One LSTM step: returns `(h_t, c_t)`.
pub fn lstm_step(
    p: &LstmParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), NeuralError> {
    for g in p.gates() {
        check_gate(g, x, h_prev)?;
    }
    if c_prev.len() != h_prev.len() {
        return Err(NeuralError::Shape(format!(
            "cell state has length {}, hidden state {}",
            c_prev.len(),
            h_prev.len()
        )));
    }
    let c = lstm_forward(p, x, h_prev, c_prev);
    Ok((c.h, c.c))
}
