//! Fully connected layer.

use rand::Rng;

use super::tensor::{matmul_accumulate, matmul_transpose_a, matmul_transpose_b, Tensor};
use super::{NnError, Scalar};

#[derive(Debug, Clone)]
pub struct Dense<T: Scalar> {
    pub units: usize,
    in_features: usize,
    weights: Tensor<T>,
    bias: Tensor<T>,
    cached_input: Option<Tensor<T>>,
}

impl<T: Scalar> Dense<T> {
    pub fn new(in_features: usize, units: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (in_features + units) as f64).sqrt();
        let weights = Tensor::from_vec(
            &[in_features, units],
            (0..in_features * units)
                .map(|_| T::from_f64(rng.random_range(-limit..limit)))
                .collect(),
        )
        .expect("dense weight volume");
        Self {
            units,
            in_features,
            weights,
            bias: Tensor::zeros(&[units]),
            cached_input: None,
        }
    }

    pub fn weights(&self) -> &Tensor<T> {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Tensor<T> {
        &mut self.weights
    }

    pub fn bias(&self) -> &Tensor<T> {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut Tensor<T> {
        &mut self.bias
    }

    pub fn weights_bias_mut(&mut self) -> (&mut Tensor<T>, &mut Tensor<T>) {
        (&mut self.weights, &mut self.bias)
    }

    pub fn forward(&mut self, input: &Tensor<T>, train: bool) -> Result<Tensor<T>, NnError> {
        let n = input.batch();
        if input.dims() != [n, self.in_features] {
            return Err(NnError::ShapeMismatch(format!(
                "dense expected (N, {}), got {:?}",
                self.in_features,
                input.dims()
            )));
        }
        let mut out = Tensor::zeros(&[n, self.units]);
        matmul_accumulate(
            input.data(),
            self.weights.data(),
            n,
            self.in_features,
            self.units,
            out.data_mut(),
        );
        for row in out.data_mut().chunks_mut(self.units) {
            for (v, &b) in row.iter_mut().zip(self.bias.data()) {
                *v = *v + b;
            }
        }
        self.cached_input = train.then(|| input.clone());
        Ok(out)
    }

    /// Returns `(grad_input, grad_weights, grad_bias)`.
    pub fn backward(
        &mut self,
        grad_out: &Tensor<T>,
    ) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>), NnError> {
        let input = self.cached_input.take().ok_or(NnError::StaleForward)?;
        let n = input.batch();
        if grad_out.dims() != [n, self.units] {
            return Err(NnError::ShapeMismatch(format!(
                "dense backward expected (N, {}), got {:?}",
                self.units,
                grad_out.dims()
            )));
        }

        let dw = matmul_transpose_a(input.data(), grad_out.data(), n, self.in_features, self.units);
        let grad_w = Tensor::from_vec(&[self.in_features, self.units], dw)?;

        let mut grad_b = Tensor::zeros(&[self.units]);
        for row in grad_out.data().chunks(self.units) {
            for (acc, &g) in grad_b.data_mut().iter_mut().zip(row) {
                *acc = *acc + g;
            }
        }

        let dx = matmul_transpose_b(
            grad_out.data(),
            self.weights.data(),
            n,
            self.units,
            self.in_features,
        );
        let grad_in = Tensor::from_vec(&[n, self.in_features], dx)?;
        Ok((grad_in, grad_w, grad_b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forward_is_affine_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut layer = Dense::<f64>::new(2, 2, &mut rng);
        layer
            .weights_mut()
            .data_mut()
            .copy_from_slice(&[0.1, 0.2, 0.3, 0.4]);
        layer.bias_mut().data_mut().copy_from_slice(&[0.5, -0.5]);
        let x = Tensor::from_vec(&[1, 2], vec![1.0, 2.0]).unwrap();
        let y = layer.forward(&x, false).unwrap();
        // [1, 2] * [[0.1, 0.2], [0.3, 0.4]] + [0.5, -0.5] = [1.2, 0.5]
        assert!((y.data()[0] - 1.2).abs() < 1e-12);
        assert!((y.data()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn backward_gradients_match_outer_product() {
        // For a single sample, dW = x (outer) delta and db = delta.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut layer = Dense::<f64>::new(2, 2, &mut rng);
        let x = Tensor::from_vec(&[1, 2], vec![1.5, -2.0]).unwrap();
        layer.forward(&x, true).unwrap();
        let delta = Tensor::from_vec(&[1, 2], vec![0.25, -0.75]).unwrap();
        let (_, gw, gb) = layer.backward(&delta).unwrap();
        let expected = [1.5 * 0.25, 1.5 * -0.75, -2.0 * 0.25, -2.0 * -0.75];
        for (g, e) in gw.data().iter().zip(&expected) {
            assert!((g - e).abs() < 1e-12);
        }
        assert_eq!(gb.data(), delta.data());
    }
}
