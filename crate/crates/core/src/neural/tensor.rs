use serde::{Deserialize, Serialize};

/// Row-major dense tensor of `f64`. Only rank 1 and rank 2 are used by the models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    /// Panics if `data.len()` is not the product of `shape`.
    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            shape.iter().product::<usize>(),
            "data length does not match shape {shape:?}"
        );
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn zeros_like(other: &Tensor) -> Self {
        Self::zeros(&other.shape)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        if self.shape.len() > 1 {
            self.shape[1]
        } else {
            1
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[r * c..(r + 1) * c]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// `out += self · x` for a matrix of shape `[out.len(), x.len()]`.
    pub fn matvec_acc(&self, x: &[f64], out: &mut [f64]) {
        let c = self.cols();
        debug_assert_eq!(c, x.len());
        debug_assert_eq!(self.rows(), out.len());
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(c)) {
            *o += row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    /// `out += selfᵀ · v`.
    pub fn matvec_t_acc(&self, v: &[f64], out: &mut [f64]) {
        let c = self.cols();
        debug_assert_eq!(self.rows(), v.len());
        debug_assert_eq!(c, out.len());
        for (&vi, row) in v.iter().zip(self.data.chunks_exact(c)) {
            if vi != 0.0 {
                for (o, w) in out.iter_mut().zip(row) {
                    *o += vi * w;
                }
            }
        }
    }

    /// `self += a · bᵀ`.
    pub fn outer_acc(&mut self, a: &[f64], b: &[f64]) {
        let c = self.cols();
        debug_assert_eq!(self.rows(), a.len());
        debug_assert_eq!(c, b.len());
        for (&ai, row) in a.iter().zip(self.data.chunks_exact_mut(c)) {
            if ai != 0.0 {
                for (w, bj) in row.iter_mut().zip(b) {
                    *w += ai * bj;
                }
            }
        }
    }

    pub fn acc(&mut self, v: &[f64]) {
        debug_assert_eq!(self.data.len(), v.len());
        for (a, b) in self.data.iter_mut().zip(v) {
            *a += b;
        }
    }
}
