use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Activation, Matrix, Parameters};
use crate::error::{shape_err, Result};

/// Fully connected layer `y = activation(W x + b)` with `W` of shape (out, in).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// Input remembered for the backward pass. `Sparse` is a binary vector given by its active positions.
#[derive(Debug, Clone)]
pub enum LayerInput {
    Dense(Vec<f64>),
    Sparse(Vec<usize>),
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    pub input: LayerInput,
    pub pre_activation: Vec<f64>,
    pub output: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGradients {
    pub dx: Vec<f64>,
    pub dw: Matrix,
    pub db: Vec<f64>,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(shape_err!(
                "bias length {} does not match {} output rows",
                bias.len(),
                weights.rows()
            ));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    /// Weights uniform in `±sqrt(6 / fan_in)`, zero bias.
    pub fn init<R: Rng>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / inputs.max(1) as f64).sqrt();
        let data = (0..inputs * outputs)
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        Self {
            weights: Matrix::from_vec(outputs, inputs, data).expect("sized above"),
            bias: vec![0.0; outputs],
            activation,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            weights: Matrix::zeros(self.weights.rows(), self.weights.cols()),
            bias: vec![0.0; self.bias.len()],
            activation: self.activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    fn finish(&self, pre: Vec<f64>, input: LayerInput) -> (Vec<f64>, DenseCache) {
        let output = self.activation.apply(&pre);
        (
            output.clone(),
            DenseCache {
                input,
                pre_activation: pre,
                output,
            },
        )
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, DenseCache)> {
        if x.len() != self.in_dim() {
            return Err(shape_err!(
                "dense layer expects {} inputs, got {}",
                self.in_dim(),
                x.len()
            ));
        }
        let pre = (0..self.out_dim())
            .map(|i| {
                let row = self.weights.row(i);
                self.bias[i] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect();
        Ok(self.finish(pre, LayerInput::Dense(x.to_vec())))
    }

    /// Forward pass for a binary input given by its sorted active positions.
    pub fn forward_sparse(&self, active: &[usize]) -> Result<(Vec<f64>, DenseCache)> {
        if let Some(&bad) = active.iter().find(|&&j| j >= self.in_dim()) {
            return Err(shape_err!(
                "active position {bad} outside {} inputs",
                self.in_dim()
            ));
        }
        let pre = (0..self.out_dim())
            .map(|i| {
                let row = self.weights.row(i);
                self.bias[i] + active.iter().map(|&j| row[j]).sum::<f64>()
            })
            .collect();
        Ok(self.finish(pre, LayerInput::Sparse(active.to_vec())))
    }

    /// Accumulate `dW`, `db` into `grad` and return `dx` when `want_dx` is set.
    pub fn backward_into(
        &self,
        cache: &DenseCache,
        dy: &[f64],
        grad: &mut DenseLayer,
        want_dx: bool,
    ) -> Result<Option<Vec<f64>>> {
        if dy.len() != self.out_dim() || cache.pre_activation.len() != self.out_dim() {
            return Err(shape_err!(
                "dense backward expects {} output gradients, got {}",
                self.out_dim(),
                dy.len()
            ));
        }
        if grad.weights.shape() != self.weights.shape() {
            return Err(shape_err!("gradient buffer shape mismatch"));
        }
        let dz = self
            .activation
            .backward(&cache.pre_activation, &cache.output, dy);
        for (b, g) in grad.bias.iter_mut().zip(&dz) {
            *b += g;
        }
        match &cache.input {
            LayerInput::Dense(x) => {
                if x.len() != self.in_dim() {
                    return Err(shape_err!("cached input width mismatch"));
                }
                for (i, &g) in dz.iter().enumerate() {
                    if g == 0.0 {
                        continue;
                    }
                    for (w, &v) in grad.weights.row_mut(i).iter_mut().zip(x) {
                        *w += g * v;
                    }
                }
            }
            LayerInput::Sparse(active) => {
                for (i, &g) in dz.iter().enumerate() {
                    let row = grad.weights.row_mut(i);
                    for &j in active {
                        row[j] += g;
                    }
                }
            }
        }
        if !want_dx {
            return Ok(None);
        }
        let mut dx = vec![0.0; self.in_dim()];
        for (i, &g) in dz.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            for (d, &w) in dx.iter_mut().zip(self.weights.row(i)) {
                *d += w * g;
            }
        }
        Ok(Some(dx))
    }

    pub fn backward(&self, cache: &DenseCache, dy: &[f64]) -> Result<DenseGradients> {
        let mut grad = self.zeros_like();
        let dx = self
            .backward_into(cache, dy, &mut grad, true)?
            .expect("dx requested");
        Ok(DenseGradients {
            dx,
            dw: grad.weights,
            db: grad.bias,
        })
    }
}

impl Parameters for DenseLayer {
    fn param_slices(&self) -> Vec<&[f64]> {
        vec![self.weights.data(), &self.bias]
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.weights.data_mut(), &mut self.bias]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradient_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_layer(
        rng: &mut ChaCha8Rng,
        inputs: usize,
        outputs: usize,
        act: Activation,
    ) -> DenseLayer {
        let mut layer = DenseLayer::init(inputs, outputs, act, rng);
        for b in &mut layer.bias {
            *b = rng.random_range(-0.5..0.5);
        }
        layer
    }

    #[test]
    fn identity_and_constant_examples() {
        let eye = DenseLayer::new(
            Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(),
            vec![0.0, 0.0],
            Activation::Identity,
        )
        .unwrap();
        assert_eq!(eye.forward(&[1.0, 2.0]).unwrap().0, vec![1.0, 2.0]);
        let (_, cache) = eye.forward(&[1.0, 2.0]).unwrap();
        assert_eq!(
            eye.backward(&cache, &[0.3, -0.7]).unwrap().dx,
            vec![0.3, -0.7]
        );

        let constant =
            DenseLayer::new(Matrix::zeros(1, 3), vec![3.0], Activation::Identity).unwrap();
        assert_eq!(constant.forward(&[5.0, -2.0, 9.0]).unwrap().0, vec![3.0]);
    }

    #[test]
    fn matches_hand_rolled_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let layer = random_layer(&mut rng, 3, 4, Activation::Identity);
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = layer.forward(&x).unwrap().0;
        for i in 0..4 {
            let mut acc = layer.bias[i];
            for j in 0..3 {
                acc += layer.weights.get(i, j) * x[j];
            }
            assert!((y[i] - acc).abs() <= 1e-12);
        }
    }

    #[test]
    fn shape_errors() {
        let layer = DenseLayer::new(Matrix::zeros(2, 3), vec![0.0; 2], Activation::Relu).unwrap();
        assert!(layer.forward(&[1.0]).is_err());
        assert!(layer.forward_sparse(&[3]).is_err());
        let (_, cache) = layer.forward(&[1.0, 2.0, 3.0]).unwrap();
        assert!(layer.backward(&cache, &[1.0]).is_err());
        assert!(DenseLayer::new(Matrix::zeros(2, 3), vec![0.0], Activation::Relu).is_err());
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let layer = random_layer(&mut rng, 4, 3, Activation::Sigmoid);
        let (_, cache) = layer.forward(&[0.1, 0.2, -0.3, 0.4]).unwrap();
        let g = layer.backward(&cache, &[0.0; 3]).unwrap();
        assert!(g
            .dx
            .iter()
            .chain(g.dw.data())
            .chain(&g.db)
            .all(|&v| v == 0.0));
    }

    #[test]
    fn sparse_path_matches_dense_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let layer = random_layer(&mut rng, 9, 4, Activation::Relu);
        let active = vec![1, 4, 8];
        let mut x = vec![0.0; 9];
        for &j in &active {
            x[j] = 1.0;
        }
        let (yd, cd) = layer.forward(&x).unwrap();
        let (ys, cs) = layer.forward_sparse(&active).unwrap();
        for (a, b) in yd.iter().zip(&ys) {
            assert!((a - b).abs() < 1e-14);
        }
        let dy = [0.5, -1.0, 0.25, 2.0];
        let mut gd = layer.zeros_like();
        let mut gs = layer.zeros_like();
        layer.backward_into(&cd, &dy, &mut gd, false).unwrap();
        layer.backward_into(&cs, &dy, &mut gs, false).unwrap();
        for (a, b) in gd.flat_params().iter().zip(gs.flat_params()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        for (seed, act) in [
            (1, Activation::Identity),
            (2, Activation::Relu),
            (3, Activation::Sigmoid),
            (4, Activation::Softmax),
        ] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let layer = random_layer(&mut rng, 4, 5, act);
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            // scalar objective: weighted sum of outputs
            let objective = |l: &DenseLayer, x: &[f64]| -> f64 {
                l.forward(x)
                    .unwrap()
                    .0
                    .iter()
                    .zip(&w)
                    .map(|(a, b)| a * b)
                    .sum()
            };
            let (_, cache) = layer.forward(&x).unwrap();
            let g = layer.backward(&cache, &w).unwrap();
            let analytic: Vec<f64> = [g.dw.data(), &g.db[..]].concat();
            let err = gradient_check(
                |p| {
                    let mut l = layer.clone();
                    l.set_flat_params(p);
                    objective(&l, &x)
                },
                &layer.flat_params(),
                &analytic,
                1e-5,
            );
            assert!(err < 1e-6, "{act:?}: parameter error {err}");
            let err = gradient_check(|xp| objective(&layer, xp), &x, &g.dx, 1e-5);
            assert!(err < 1e-6, "{act:?}: input error {err}");
        }
    }
}
