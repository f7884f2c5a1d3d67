use serde::{Deserialize, Serialize};

use super::LinearError;
use crate::corpus::Label;
use crate::vectorize::SparseVector;

/// Multinomial Naive Bayes with additive (Laplace/Lidstone) smoothing, kept in log space.
///
/// Classes are indexed by label value: 0 = sincere, 1 = insincere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub class_log_prior: [f64; 2],
    #[serde(with = "log_values")]
    pub feature_log_prob: [Vec<f64>; 2],
    pub alpha: f64,
}

pub fn nb_fit(x: &[SparseVector], y: &[Label], alpha: f64) -> Result<NbModel, LinearError> {
    if x.len() != y.len() {
        return Err(LinearError::Length {
            features: x.len(),
            labels: y.len(),
        });
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(LinearError::Hyper(format!(
            "alpha must be >= 0, got {alpha}"
        )));
    }
    let dim = x.first().map(SparseVector::dim).ok_or(LinearError::Empty)?;
    let mut counts = [vec![0.0; dim], vec![0.0; dim]];
    let mut n_class = [0usize; 2];
    for (row, (v, label)) in x.iter().zip(y).enumerate() {
        if v.dim() != dim {
            return Err(LinearError::Dimension);
        }
        let c = label.as_u8() as usize;
        n_class[c] += 1;
        for (index, value) in v.iter() {
            if value < 0.0 {
                return Err(LinearError::NegativeFeature { row, index, value });
            }
            counts[c][index] += value;
        }
    }
    if n_class.contains(&0) {
        return Err(LinearError::SingleClass);
    }

    let n = x.len() as f64;
    let class_log_prior = [(n_class[0] as f64 / n).ln(), (n_class[1] as f64 / n).ln()];
    let mut feature_log_prob = [Vec::new(), Vec::new()];
    for c in 0..2 {
        let total: f64 = counts[c].iter().sum::<f64>() + alpha * dim as f64;
        if total <= 0.0 {
            return Err(LinearError::Degenerate { class: c as u8 });
        }
        let log_total = total.ln();
        feature_log_prob[c] = counts[c]
            .iter()
            .map(|&k| (k + alpha).ln() - log_total)
            .collect();
    }
    Ok(NbModel {
        class_log_prior,
        feature_log_prob,
        alpha,
    })
}

impl NbModel {
    pub fn dim(&self) -> usize {
        self.feature_log_prob[0].len()
    }

    /// Unnormalized log posterior per class: `log P(c) + Σ_t x_t log P(t|c)`.
    pub fn predict_log_posterior(&self, x: &SparseVector) -> [f64; 2] {
        let mut out = self.class_log_prior;
        for (c, o) in out.iter_mut().enumerate() {
            let flp = &self.feature_log_prob[c];
            *o += x.iter().map(|(t, v)| v * flp[t]).sum::<f64>();
        }
        out
    }

    /// Argmax of the log posterior; ties go to class 0.
    pub fn predict(&self, x: &SparseVector) -> Label {
        let lj = self.predict_log_posterior(x);
        Label::from_bool(lj[1] > lj[0])
    }

    /// Normalized posterior probability of the positive class.
    pub fn predict_proba(&self, x: &SparseVector) -> f64 {
        posterior_from_log_joint(self.predict_log_posterior(x))[1]
    }
}

/// Softmax of two log joints.
pub fn posterior_from_log_joint(lj: [f64; 2]) -> [f64; 2] {
    let m = lj[0].max(lj[1]);
    if m == f64::NEG_INFINITY {
        return [0.5, 0.5];
    }
    let e = [(lj[0] - m).exp(), (lj[1] - m).exp()];
    let s = e[0] + e[1];
    [e[0] / s, e[1] / s]
}

/// JSON has no infinities; `-inf` (zero smoothing on an unseen term) is written as a string.
mod log_values {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Value {
        Num(f64),
        Text(String),
    }

    fn encode(v: f64) -> Value {
        if v.is_finite() {
            Value::Num(v)
        } else {
            Value::Text(v.to_string())
        }
    }

    pub fn serialize<S: Serializer>(v: &[Vec<f64>; 2], s: S) -> Result<S::Ok, S::Error> {
        let enc: Vec<Vec<Value>> = v
            .iter()
            .map(|row| row.iter().map(|&x| encode(x)).collect())
            .collect();
        enc.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[Vec<f64>; 2], D::Error> {
        let raw: Vec<Vec<Value>> = Vec::deserialize(d)?;
        let mut rows = raw.into_iter().map(|row| {
            row.into_iter()
                .map(|v| match v {
                    Value::Num(x) => Ok(x),
                    Value::Text(t) => t.parse::<f64>().map_err(serde::de::Error::custom),
                })
                .collect::<Result<Vec<f64>, D::Error>>()
        });
        let a = rows
            .next()
            .ok_or_else(|| serde::de::Error::custom("missing class 0"))??;
        let b = rows
            .next()
            .ok_or_else(|| serde::de::Error::custom("missing class 1"))??;
        if rows.next().is_some() {
            return Err(serde::de::Error::custom("expected exactly two classes"));
        }
        Ok([a, b])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // vocabulary: 0 = good, 1 = bad; class A = 0, class B = 1
    fn good_bad() -> NbModel {
        let x = vec![
            SparseVector::from_dense(&[2.0, 0.0]),
            SparseVector::from_dense(&[0.0, 1.0]),
        ];
        nb_fit(&x, &[Label::Sincere, Label::Insincere], 1.0).unwrap()
    }

    #[test]
    fn laplace_hand_example() {
        let m = good_bad();
        let p = |c: usize, t: usize| m.feature_log_prob[c][t].exp();
        assert!((p(0, 0) - 0.75).abs() < 1e-15);
        assert!((p(0, 1) - 0.25).abs() < 1e-15);
        assert!((p(1, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((p(1, 1) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.class_log_prior, [0.5f64.ln(), 0.5f64.ln()]);
    }

    #[test]
    fn predicts_good_as_a() {
        let m = good_bad();
        let x = SparseVector::from_dense(&[1.0, 0.0]);
        let lj = m.predict_log_posterior(&x);
        assert!((lj[0].exp() - 0.375).abs() < 1e-15);
        assert!((lj[1].exp() - 0.5 / 3.0).abs() < 1e-15);
        assert_eq!(m.predict(&x), Label::Sincere);
    }

    #[test]
    fn empty_vector_uses_priors() {
        let x = vec![
            SparseVector::from_dense(&[1.0]),
            SparseVector::from_dense(&[1.0]),
            SparseVector::from_dense(&[1.0]),
        ];
        let m = nb_fit(
            &x,
            &[Label::Sincere, Label::Insincere, Label::Insincere],
            1.0,
        )
        .unwrap();
        assert_eq!(m.predict(&SparseVector::zeros(1)), Label::Insincere);
        assert_eq!(
            m.predict_log_posterior(&SparseVector::zeros(1)),
            m.class_log_prior
        );
    }

    #[test]
    fn tie_goes_to_class_zero() {
        let m = good_bad();
        assert_eq!(m.predict(&SparseVector::zeros(2)), Label::Sincere);
    }

    #[test]
    fn zero_alpha_gives_neg_infinity_and_survives_json() {
        let x = vec![
            SparseVector::from_dense(&[2.0, 0.0]),
            SparseVector::from_dense(&[0.0, 1.0]),
        ];
        let m = nb_fit(&x, &[Label::Sincere, Label::Insincere], 0.0).unwrap();
        assert_eq!(m.feature_log_prob[0][1], f64::NEG_INFINITY);
        let back: NbModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(
            m.predict(&SparseVector::from_dense(&[0.0, 1.0])),
            Label::Insincere
        );
    }

    #[test]
    fn rejects_bad_input() {
        let neg = vec![
            SparseVector::from_dense(&[-1.0]),
            SparseVector::from_dense(&[1.0]),
        ];
        assert!(matches!(
            nb_fit(&neg, &[Label::Sincere, Label::Insincere], 1.0),
            Err(LinearError::NegativeFeature { row: 0, .. })
        ));
        let one = vec![SparseVector::from_dense(&[1.0])];
        assert_eq!(
            nb_fit(&one, &[Label::Sincere], 1.0),
            Err(LinearError::SingleClass)
        );
        assert_eq!(nb_fit(&[], &[], 1.0), Err(LinearError::Empty));
    }

    #[test]
    fn probabilities_normalized_and_shift_invariant() {
        let m = good_bad();
        let x = SparseVector::from_dense(&[0.3, 0.7]);
        let lj = m.predict_log_posterior(&x);
        let p = posterior_from_log_joint(lj);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        let shifted = posterior_from_log_joint([lj[0] + 123.0, lj[1] + 123.0]);
        assert!((shifted[1] - p[1]).abs() < 1e-12);
    }

    #[test]
    fn feature_probs_sum_to_one() {
        let x = vec![
            SparseVector::from_dense(&[0.2, 0.0, 0.9]),
            SparseVector::from_dense(&[0.0, 0.5, 0.5]),
            SparseVector::from_dense(&[1.0, 0.0, 0.0]),
        ];
        let m = nb_fit(&x, &[Label::Sincere, Label::Insincere, Label::Sincere], 0.5).unwrap();
        for c in 0..2 {
            let s: f64 = m.feature_log_prob[c].iter().map(|v| v.exp()).sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
        assert!((m.class_log_prior.iter().map(|v| v.exp()).sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
