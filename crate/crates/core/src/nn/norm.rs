//! Batch normalization over the channel (last) axis.

use super::tensor::Tensor;
use super::{NnError, Scalar};

#[derive(Debug, Clone)]
struct BnCache<T> {
    input: Tensor<T>,
    mean: Vec<f64>,
    var: Vec<f64>,
}

/// Standardizes each channel with batch statistics in training and with
/// exponentially averaged running statistics at inference.
#[derive(Debug, Clone)]
pub struct BatchNorm<T: Scalar> {
    channels: usize,
    pub epsilon: f64,
    pub momentum: f64,
    gamma: Tensor<T>,
    beta: Tensor<T>,
    running_mean: Tensor<T>,
    running_var: Tensor<T>,
    cache: Option<BnCache<T>>,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn new(channels: usize, epsilon: f64, momentum: f64) -> Self {
        Self {
            channels,
            epsilon,
            momentum,
            gamma: Tensor::from_vec(&[channels], vec![T::one(); channels]).expect("gamma"),
            beta: Tensor::zeros(&[channels]),
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::from_vec(&[channels], vec![T::one(); channels]).expect("var"),
            cache: None,
        }
    }

    pub fn gamma(&self) -> &Tensor<T> {
        &self.gamma
    }

    pub fn gamma_mut(&mut self) -> &mut Tensor<T> {
        &mut self.gamma
    }

    pub fn beta(&self) -> &Tensor<T> {
        &self.beta
    }

    pub fn beta_mut(&mut self) -> &mut Tensor<T> {
        &mut self.beta
    }

    pub fn gamma_beta_mut(&mut self) -> (&mut Tensor<T>, &mut Tensor<T>) {
        (&mut self.gamma, &mut self.beta)
    }

    pub fn running_mean(&self) -> &Tensor<T> {
        &self.running_mean
    }

    pub fn running_mean_mut(&mut self) -> &mut Tensor<T> {
        &mut self.running_mean
    }

    pub fn running_var(&self) -> &Tensor<T> {
        &self.running_var
    }

    pub fn running_var_mut(&mut self) -> &mut Tensor<T> {
        &mut self.running_var
    }

    fn check_dims(&self, input: &Tensor<T>) -> Result<(), NnError> {
        if input.dims().last() != Some(&self.channels) {
            return Err(NnError::ShapeMismatch(format!(
                "batch norm expected trailing dim {}, got {:?}",
                self.channels,
                input.dims()
            )));
        }
        Ok(())
    }

    pub fn forward(&mut self, input: &Tensor<T>, train: bool) -> Result<Tensor<T>, NnError> {
        self.check_dims(input)?;
        let c = self.channels;
        let m = input.len() / c;

        let (mean, var) = if train {
            // Batch statistics, accumulated in f64 for stability.
            let mut mean = vec![0.0f64; c];
            for row in input.data().chunks_exact(c) {
                for (acc, &v) in mean.iter_mut().zip(row) {
                    *acc += v.to_f64s();
                }
            }
            for v in &mut mean {
                *v /= m as f64;
            }
            let mut var = vec![0.0f64; c];
            for row in input.data().chunks_exact(c) {
                for ((acc, &v), &mu) in var.iter_mut().zip(row).zip(&mean) {
                    let d = v.to_f64s() - mu;
                    *acc += d * d;
                }
            }
            for v in &mut var {
                *v /= m as f64;
            }

            for ch in 0..c {
                let blend = |running: T, batch: f64| {
                    T::from_f64(self.momentum * running.to_f64s() + (1.0 - self.momentum) * batch)
                };
                self.running_mean.data_mut()[ch] = blend(self.running_mean.data()[ch], mean[ch]);
                self.running_var.data_mut()[ch] = blend(self.running_var.data()[ch], var[ch]);
            }
            (mean, var)
        } else {
            (
                self.running_mean.data().iter().map(|v| v.to_f64s()).collect(),
                self.running_var.data().iter().map(|v| v.to_f64s()).collect(),
            )
        };

        let inv_std: Vec<T> = var
            .iter()
            .map(|&v| T::from_f64(1.0 / (v + self.epsilon).sqrt()))
            .collect();
        let mean_t: Vec<T> = mean.iter().map(|&v| T::from_f64(v)).collect();

        let mut out = input.clone();
        for row in out.data_mut().chunks_exact_mut(c) {
            for (ch, v) in row.iter_mut().enumerate() {
                *v = (*v - mean_t[ch]) * inv_std[ch] * self.gamma.data()[ch]
                    + self.beta.data()[ch];
            }
        }

        self.cache = train.then(|| BnCache {
            input: input.clone(),
            mean,
            var,
        });
        Ok(out)
    }

    /// Returns `(grad_input, grad_gamma, grad_beta)`; gradients flow through
    /// the batch statistics as well.
    pub fn backward(
        &mut self,
        grad_out: &Tensor<T>,
    ) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>), NnError> {
        let cache = self.cache.take().ok_or(NnError::StaleForward)?;
        self.check_dims(grad_out)?;
        if grad_out.dims() != cache.input.dims() {
            return Err(NnError::ShapeMismatch(format!(
                "batch norm backward got {:?}, forward saw {:?}",
                grad_out.dims(),
                cache.input.dims()
            )));
        }
        let c = self.channels;
        let m = cache.input.len() / c;
        let inv_std: Vec<f64> = cache
            .var
            .iter()
            .map(|&v| 1.0 / (v + self.epsilon).sqrt())
            .collect();

        // Per-channel sums of g and g * x_hat.
        let mut sum_g = vec![0.0f64; c];
        let mut sum_gx = vec![0.0f64; c];
        for (g_row, x_row) in grad_out
            .data()
            .chunks_exact(c)
            .zip(cache.input.data().chunks_exact(c))
        {
            for ch in 0..c {
                let g = g_row[ch].to_f64s();
                let x_hat = (x_row[ch].to_f64s() - cache.mean[ch]) * inv_std[ch];
                sum_g[ch] += g;
                sum_gx[ch] += g * x_hat;
            }
        }

        let mut grad_in = Tensor::zeros(cache.input.dims());
        for ((gi_row, g_row), x_row) in grad_in
            .data_mut()
            .chunks_exact_mut(c)
            .zip(grad_out.data().chunks_exact(c))
            .zip(cache.input.data().chunks_exact(c))
        {
            for ch in 0..c {
                let g = g_row[ch].to_f64s();
                let x_hat = (x_row[ch].to_f64s() - cache.mean[ch]) * inv_std[ch];
                let gamma = self.gamma.data()[ch].to_f64s();
                let dx = gamma * inv_std[ch]
                    * (g - sum_g[ch] / m as f64 - x_hat * sum_gx[ch] / m as f64);
                gi_row[ch] = T::from_f64(dx);
            }
        }

        let grad_gamma =
            Tensor::from_vec(&[c], sum_gx.iter().map(|&v| T::from_f64(v)).collect())?;
        let grad_beta = Tensor::from_vec(&[c], sum_g.iter().map(|&v| T::from_f64(v)).collect())?;
        Ok((grad_in, grad_gamma, grad_beta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn train_mode_standardizes_each_channel() {
        let mut bn = BatchNorm::<f64>::new(2, 1e-3, 0.99);
        let input = Tensor::from_vec(
            &[2, 2, 1, 2],
            vec![1.0, 10.0, 2.0, 20.0, 3.0, 30.0, 4.0, 40.0],
        )
        .unwrap();
        let out = bn.forward(&input, true).unwrap();
        for ch in 0..2 {
            let vals: Vec<f64> = out.data().iter().skip(ch).step_by(2).cloned().collect();
            let mean: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
            let var: f64 =
                vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
            assert!(mean.abs() < 1e-9);
            // Variance shrinks slightly below 1 because of epsilon.
            assert!((var - 1.0).abs() < 2e-3, "var {var}");
        }
    }

    #[test]
    fn eval_mode_uses_running_statistics() {
        let mut bn = BatchNorm::<f64>::new(1, 1e-3, 0.0);
        // momentum 0: running stats become exactly the last batch stats.
        let input = Tensor::from_vec(&[4, 1], vec![2.0, 4.0, 6.0, 8.0]).unwrap();
        bn.forward(&input, true).unwrap();
        assert!((bn.running_mean().data()[0] - 5.0).abs() < 1e-12);
        let probe = Tensor::from_vec(&[1, 1], vec![5.0]).unwrap();
        let out = bn.forward(&probe, false).unwrap();
        assert!(out.data()[0].abs() < 1e-9, "{}", out.data()[0]);
    }

    #[test]
    fn running_stats_blend_with_momentum() {
        let mut bn = BatchNorm::<f64>::new(1, 1e-3, 0.9);
        let input = Tensor::from_vec(&[2, 1], vec![1.0, 3.0]).unwrap();
        bn.forward(&input, true).unwrap();
        // mean: 0.9 * 0 + 0.1 * 2 = 0.2; var: 0.9 * 1 + 0.1 * 1 = 1.0
        assert!((bn.running_mean().data()[0] - 0.2).abs() < 1e-12);
        assert!((bn.running_var().data()[0] - 1.0).abs() < 1e-12);
    }
}
