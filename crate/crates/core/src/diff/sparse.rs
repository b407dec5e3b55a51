use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Compressed sparse row matrix with `f64` values.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if indptr.len() != n_rows + 1
            || indices.len() != values.len()
            || indptr.last().copied() != Some(indices.len())
            || indptr.windows(2).any(|w| w[0] > w[1])
            || indices.iter().any(|&c| c >= n_cols)
        {
            return Err(Error::data("malformed CSR structure"));
        }
        Ok(Csr {
            n_rows,
            n_cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Csr {
            n_rows: n,
            n_cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(column, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn to_dense(&self) -> Tensor {
        let mut out = Tensor::zeros(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                out.set(r, c, out.get(r, c) + v);
            }
        }
        out
    }

    /// `self · x` for dense `x`.
    pub fn matmul_dense(&self, x: &Tensor) -> Result<Tensor> {
        if self.n_cols != x.rows() {
            return Err(Error::Shape {
                op: "sparse_dense_matmul",
                left: (self.n_rows, self.n_cols),
                right: x.shape(),
            });
        }
        let m = x.cols();
        let mut out = Tensor::zeros(self.n_rows, m);
        for r in 0..self.n_rows {
            let out_row = out.row_mut(r);
            for (c, v) in self.row(r) {
                for (o, &b) in out_row.iter_mut().zip(x.row(c)) {
                    *o += v * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · g` for dense `g`; the backward of [`Csr::matmul_dense`].
    pub(crate) fn t_matmul_dense(&self, g: &Tensor) -> Tensor {
        let m = g.cols();
        let mut out = Tensor::zeros(self.n_cols, m);
        for r in 0..self.n_rows {
            let g_row = g.row(r);
            for (c, v) in self.row(r) {
                for (o, &b) in out.row_mut(c).iter_mut().zip(g_row) {
                    *o += v * b;
                }
            }
        }
        out
    }
}
