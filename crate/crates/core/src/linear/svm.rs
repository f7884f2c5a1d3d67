use serde::{Deserialize, Serialize};

use super::LinearError;
use crate::corpus::Label;
use crate::rng;
use crate::vectorize::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmHyper {
    /// Regularization strength λ in `(λ/2)‖w‖² + mean hinge`.
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Project `w` onto the ball of radius `1/√λ` after each step.
    #[serde(default = "yes")]
    pub project: bool,
    /// Recorded for reference; a linear kernel ignores it.
    #[serde(default = "default_degree")]
    pub poly_degree: u32,
    /// Recorded for reference; a linear kernel ignores it.
    #[serde(default = "default_gamma")]
    pub gamma: String,
}

fn yes() -> bool {
    true
}

fn default_degree() -> u32 {
    3
}

fn default_gamma() -> String {
    "auto".into()
}

impl Default for SvmHyper {
    fn default() -> Self {
        SvmHyper {
            lambda: 1e-4,
            epochs: 20,
            seed: 0,
            project: true,
            poly_degree: default_degree(),
            gamma: default_gamma(),
        }
    }
}

/// Separating hyperplane `w·x + b = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub hyper: SvmHyper,
    /// Full training objective after each epoch.
    pub objective_history: Vec<f64>,
}

fn sign(label: Label) -> f64 {
    if label.is_positive() {
        1.0
    } else {
        -1.0
    }
}

/// `(λ/2)(‖w‖² + b²) + mean_i max(0, 1 − y_i (w·x_i + b))`, labels mapped 0 → −1, 1 → +1.
pub fn svm_objective(
    weights: &[f64],
    bias: f64,
    lambda: f64,
    x: &[SparseVector],
    y: &[Label],
) -> f64 {
    let reg = 0.5 * lambda * (weights.iter().map(|w| w * w).sum::<f64>() + bias * bias);
    let hinge: f64 = x
        .iter()
        .zip(y)
        .map(|(v, &l)| (1.0 - sign(l) * (v.dot_dense(weights) + bias)).max(0.0))
        .sum();
    reg + hinge / x.len() as f64
}

/// Pegasos stochastic subgradient descent with step `1/(λt)`.
///
/// The bias is the weight of an implicit constant feature equal to 1, so it is
/// shrunk and projected together with `w`. Each epoch visits every row once in a
/// seeded random order. `(w, b)` is kept as `scale · (v, v_b)` so the shrink
/// step costs O(1) on sparse rows.
pub fn svm_fit(x: &[SparseVector], y: &[Label], hyper: &SvmHyper) -> Result<SvmModel, LinearError> {
    if x.len() != y.len() {
        return Err(LinearError::Length {
            features: x.len(),
            labels: y.len(),
        });
    }
    let dim = x.first().map(SparseVector::dim).ok_or(LinearError::Empty)?;
    if x.iter().any(|v| v.dim() != dim) {
        return Err(LinearError::Dimension);
    }
    if !y.iter().any(|l| l.is_positive()) || y.iter().all(|l| l.is_positive()) {
        return Err(LinearError::SingleClass);
    }
    if !(hyper.lambda > 0.0 && hyper.lambda.is_finite()) {
        return Err(LinearError::Hyper(format!(
            "lambda must be > 0, got {}",
            hyper.lambda
        )));
    }
    if hyper.epochs == 0 {
        return Err(LinearError::Hyper("epochs must be >= 1".into()));
    }

    let lambda = hyper.lambda;
    let radius_sq = 1.0 / lambda;
    let mut v = vec![0.0; dim];
    let mut scale = 1.0f64;
    let mut v_norm_sq = 0.0f64;
    let mut v_bias = 0.0f64;
    let mut t = 0u64;
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut r = rng::seeded(hyper.seed);
    let mut objective_history = Vec::with_capacity(hyper.epochs);

    for _ in 0..hyper.epochs {
        rng::shuffle(&mut order, &mut r);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let yi = sign(y[i]);
            let margin = yi * scale * (x[i].dot_dense(&v) + v_bias);

            let shrink = 1.0 - eta * lambda;
            if shrink <= 0.0 {
                v.iter_mut().for_each(|w| *w = 0.0);
                v_bias = 0.0;
                v_norm_sq = 0.0;
                scale = 1.0;
            } else {
                scale *= shrink;
            }

            if margin < 1.0 {
                let c = eta * yi / scale;
                let dot = x[i].dot_dense(&v);
                let xx: f64 = x[i].values().iter().map(|a| a * a).sum::<f64>() + 1.0;
                for (j, a) in x[i].iter() {
                    v[j] += c * a;
                }
                v_norm_sq += 2.0 * c * (dot + v_bias) + c * c * xx;
                v_bias += c;
            }

            if hyper.project {
                let w_norm_sq = scale * scale * v_norm_sq;
                if w_norm_sq > radius_sq {
                    scale *= (radius_sq / w_norm_sq).sqrt();
                }
            }

            // fold the scale back in before it underflows
            if scale < 1e-9 {
                v.iter_mut().for_each(|w| *w *= scale);
                v_bias *= scale;
                v_norm_sq *= scale * scale;
                scale = 1.0;
            }
        }
        let w: Vec<f64> = v.iter().map(|a| a * scale).collect();
        objective_history.push(svm_objective(&w, v_bias * scale, lambda, x, y));
    }

    Ok(SvmModel {
        weights: v.into_iter().map(|a| a * scale).collect(),
        bias: v_bias * scale,
        hyper: hyper.clone(),
        objective_history,
    })
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn decision(&self, x: &SparseVector) -> f64 {
        x.dot_dense(&self.weights) + self.bias
    }

    /// Positive iff the decision value is ≥ 0.
    pub fn predict(&self, x: &SparseVector) -> Label {
        Label::from_bool(self.decision(x) >= 0.0)
    }

    pub fn objective(&self, x: &[SparseVector], y: &[Label]) -> f64 {
        svm_objective(&self.weights, self.bias, self.hyper.lambda, x, y)
    }
}
