use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Matrix, Parameters};
use crate::error::{shape_err, Result};

/// `n_kernels` one-dimensional kernels of `width` words, each slid along the
/// sequence axis independently in every embedding channel, followed by a max
/// over all `len - width + 1` positions.
///
/// For kernel `c` and channel `e`:
///
/// ```text
/// conv[t]     = bias[c] + sum_j kernels[c][j] * x[t + j][e]     t in 0..=len-width
/// pooled[c,e] = max_t conv[t]
/// ```
///
/// The output is `pooled` flattened kernel-major (`c * channels + e`). Ties in the
/// max resolve to the smallest `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvMaxPoolLayer {
    pub kernels: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvCache {
    pub input: Matrix,
    /// Winning window start for each (kernel, channel), kernel-major.
    pub argmax: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGradients {
    pub dx: Matrix,
    pub dkernels: Matrix,
    pub dbias: Vec<f64>,
}

impl ConvMaxPoolLayer {
    pub fn new(kernels: Matrix, bias: Vec<f64>) -> Result<Self> {
        if kernels.rows() == 0 || kernels.cols() == 0 {
            return Err(shape_err!(
                "convolution needs at least one kernel of width >= 1"
            ));
        }
        if bias.len() != kernels.rows() {
            return Err(shape_err!(
                "{} biases for {} kernels",
                bias.len(),
                kernels.rows()
            ));
        }
        Ok(Self { kernels, bias })
    }

    /// Kernels uniform in `±sqrt(6 / width)`, zero bias.
    pub fn init<R: Rng>(n_kernels: usize, width: usize, rng: &mut R) -> Self {
        let limit = (6.0 / width.max(1) as f64).sqrt();
        let data = (0..n_kernels * width)
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        Self {
            kernels: Matrix::from_vec(n_kernels, width, data).expect("sized above"),
            bias: vec![0.0; n_kernels],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            kernels: Matrix::zeros(self.kernels.rows(), self.kernels.cols()),
            bias: vec![0.0; self.bias.len()],
        }
    }

    pub fn n_kernels(&self) -> usize {
        self.kernels.rows()
    }

    pub fn width(&self) -> usize {
        self.kernels.cols()
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Vec<f64>, ConvCache)> {
        let (len, channels) = x.shape();
        let width = self.width();
        if width > len {
            return Err(shape_err!(
                "kernel width {width} exceeds sequence length {len}"
            ));
        }
        let positions = len - width + 1;
        let mut pooled = vec![f64::NEG_INFINITY; self.n_kernels() * channels];
        let mut argmax = vec![0usize; pooled.len()];
        let mut acc = vec![0.0; channels];
        for c in 0..self.n_kernels() {
            let kernel = self.kernels.row(c);
            let out = &mut pooled[c * channels..(c + 1) * channels];
            let arg = &mut argmax[c * channels..(c + 1) * channels];
            for t in 0..positions {
                acc.fill(self.bias[c]);
                for (j, &k) in kernel.iter().enumerate() {
                    for (a, &v) in acc.iter_mut().zip(x.row(t + j)) {
                        *a += k * v;
                    }
                }
                for e in 0..channels {
                    if t == 0 || acc[e] > out[e] {
                        out[e] = acc[e];
                        arg[e] = t;
                    }
                }
            }
        }
        Ok((
            pooled,
            ConvCache {
                input: x.clone(),
                argmax,
            },
        ))
    }

    /// Accumulate kernel and bias gradients into `grad`; returns `dx`.
    /// Gradient flows only through the winning window of each (kernel, channel).
    pub fn backward_into(
        &self,
        cache: &ConvCache,
        dy: &[f64],
        grad: &mut ConvMaxPoolLayer,
    ) -> Result<Matrix> {
        let (len, channels) = cache.input.shape();
        if dy.len() != self.n_kernels() * channels || cache.argmax.len() != dy.len() {
            return Err(shape_err!(
                "conv backward expects {} gradients, got {}",
                self.n_kernels() * channels,
                dy.len()
            ));
        }
        if grad.kernels.shape() != self.kernels.shape() {
            return Err(shape_err!("gradient buffer shape mismatch"));
        }
        let mut dx = Matrix::zeros(len, channels);
        for c in 0..self.n_kernels() {
            for e in 0..channels {
                let g = dy[c * channels + e];
                if g == 0.0 {
                    continue;
                }
                let t = cache.argmax[c * channels + e];
                grad.bias[c] += g;
                for j in 0..self.width() {
                    let dk = grad.kernels.get(c, j) + g * cache.input.get(t + j, e);
                    grad.kernels.set(c, j, dk);
                    let d = dx.get(t + j, e) + g * self.kernels.get(c, j);
                    dx.set(t + j, e, d);
                }
            }
        }
        Ok(dx)
    }

    pub fn backward(&self, cache: &ConvCache, dy: &[f64]) -> Result<ConvGradients> {
        let mut grad = self.zeros_like();
        let dx = self.backward_into(cache, dy, &mut grad)?;
        Ok(ConvGradients {
            dx,
            dkernels: grad.kernels,
            dbias: grad.bias,
        })
    }
}

impl Parameters for ConvMaxPoolLayer {
    fn param_slices(&self) -> Vec<&[f64]> {
        vec![self.kernels.data(), &self.bias]
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.kernels.data_mut(), &mut self.bias]
    }
}
