//! Linear classifiers over TF-IDF features: multinomial Naive Bayes and a
//! primal linear SVM.

mod nb;
mod svm;

pub use nb::{nb_fit, posterior_from_log_joint, NbModel};
pub use svm::{svm_fit, svm_objective, SvmHyper, SvmModel};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinearError {
    #[error("training set is empty")]
    Empty,
    #[error("features and labels differ in length ({features} vs {labels})")]
    Length { features: usize, labels: usize },
    #[error("training needs both classes present")]
    SingleClass,
    #[error("row {row}: negative feature value {value} at index {index}")]
    NegativeFeature {
        row: usize,
        index: usize,
        value: f64,
    },
    #[error("rows have inconsistent dimensions")]
    Dimension,
    #[error("class {class} has no feature mass and alpha is 0")]
    Degenerate { class: u8 },
    #[error("invalid hyperparameter: {0}")]
    Hyper(String),
}
