use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Matrix, Parameters};
use crate::error::{shape_err, Error, Result};

/// Lookup table mapping each index to a trainable row of length `dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingLayer {
    pub table: Matrix,
}

impl EmbeddingLayer {
    /// Entries uniform in `±0.05`.
    pub fn init<R: Rng>(rows: usize, dim: usize, rng: &mut R) -> Self {
        let data = (0..rows * dim)
            .map(|_| rng.random_range(-0.05..0.05))
            .collect();
        Self {
            table: Matrix::from_vec(rows, dim, data).expect("sized above"),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            table: Matrix::zeros(self.table.rows(), self.table.cols()),
        }
    }

    pub fn rows(&self) -> usize {
        self.table.rows()
    }

    pub fn dim(&self) -> usize {
        self.table.cols()
    }

    fn check(&self, idx: &[usize]) -> Result<()> {
        match idx.iter().find(|&&i| i >= self.rows()) {
            Some(bad) => Err(Error::Index(format!(
                "index {bad} outside embedding table of {} rows",
                self.rows()
            ))),
            None => Ok(()),
        }
    }

    /// Gather rows: output row `t` is table row `idx[t]`.
    pub fn forward(&self, idx: &[usize]) -> Result<Matrix> {
        self.check(idx)?;
        let mut out = Matrix::zeros(idx.len(), self.dim());
        for (t, &i) in idx.iter().enumerate() {
            out.row_mut(t).copy_from_slice(self.table.row(i));
        }
        Ok(out)
    }

    /// Scatter-add `dy` rows into `grad`; repeated indexes sum.
    pub fn backward_into(
        &self,
        idx: &[usize],
        dy: &Matrix,
        grad: &mut EmbeddingLayer,
    ) -> Result<()> {
        self.check(idx)?;
        if dy.shape() != (idx.len(), self.dim()) || grad.table.shape() != self.table.shape() {
            return Err(shape_err!(
                "embedding gradient {:?} does not match {} positions x {}",
                dy.shape(),
                idx.len(),
                self.dim()
            ));
        }
        for (t, &i) in idx.iter().enumerate() {
            for (g, &d) in grad.table.row_mut(i).iter_mut().zip(dy.row(t)) {
                *g += d;
            }
        }
        Ok(())
    }

    pub fn backward(&self, idx: &[usize], dy: &Matrix) -> Result<Matrix> {
        let mut grad = self.zeros_like();
        self.backward_into(idx, dy, &mut grad)?;
        Ok(grad.table)
    }
}

impl Parameters for EmbeddingLayer {
    fn param_slices(&self) -> Vec<&[f64]> {
        vec![self.table.data()]
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.table.data_mut()]
    }
}
