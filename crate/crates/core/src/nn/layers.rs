//! Parameterless layers: ReLU, inverted dropout, 2x2 max pooling, flatten,
//! and the softmax cross-entropy head.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tensor::Tensor;
use super::{NnError, Scalar};

#[derive(Debug, Clone, Default)]
pub struct Relu<T> {
    cached_active: Option<Vec<bool>>,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Scalar> Relu<T> {
    pub fn new() -> Self {
        Self {
            cached_active: None,
            _marker: std::marker::PhantomData,
        }
    }

    pub fn forward(&mut self, mut input: Tensor<T>, train: bool) -> Tensor<T> {
        self.cached_active =
            train.then(|| input.data().iter().map(|&v| v > T::zero()).collect());
        for v in input.data_mut() {
            if *v < T::zero() {
                *v = T::zero();
            }
        }
        input
    }

    pub fn backward(&mut self, mut grad_out: Tensor<T>) -> Result<Tensor<T>, NnError> {
        let active = self.cached_active.take().ok_or(NnError::StaleForward)?;
        if active.len() != grad_out.len() {
            return Err(NnError::ShapeMismatch("relu backward size".into()));
        }
        for (g, keep) in grad_out.data_mut().iter_mut().zip(active) {
            if !keep {
                *g = T::zero();
            }
        }
        Ok(grad_out)
    }
}

enum DropoutMask<T> {
    Identity,
    Scales(Vec<T>),
}

/// Inverted dropout: each activation is zeroed independently with
/// probability `rate` in training and survivors are scaled by
/// `1 / (1 - rate)`, so the expected activation is unchanged. Identity at
/// inference.
pub struct Dropout<T> {
    pub rate: f64,
    rng: ChaCha8Rng,
    cached: Option<DropoutMask<T>>,
}

impl<T: Scalar> Dropout<T> {
    pub fn new(rate: f64, seed: u64) -> Result<Self, NnError> {
        if !(0.0..1.0).contains(&rate) {
            return Err(NnError::ConfigInvalid(format!(
                "dropout rate {rate} must be in [0, 1)"
            )));
        }
        Ok(Self {
            rate,
            rng: ChaCha8Rng::seed_from_u64(seed),
            cached: None,
        })
    }

    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    pub fn forward(&mut self, mut input: Tensor<T>, train: bool) -> Tensor<T> {
        if !train {
            self.cached = None;
            return input;
        }
        if self.rate == 0.0 {
            self.cached = Some(DropoutMask::Identity);
            return input;
        }
        let keep_scale = T::from_f64(1.0 / (1.0 - self.rate));
        let scales: Vec<T> = input
            .data()
            .iter()
            .map(|_| {
                if self.rng.random::<f64>() < self.rate {
                    T::zero()
                } else {
                    keep_scale
                }
            })
            .collect();
        for (v, &s) in input.data_mut().iter_mut().zip(&scales) {
            *v = *v * s;
        }
        self.cached = Some(DropoutMask::Scales(scales));
        input
    }

    pub fn backward(&mut self, mut grad_out: Tensor<T>) -> Result<Tensor<T>, NnError> {
        match self.cached.take().ok_or(NnError::StaleForward)? {
            DropoutMask::Identity => Ok(grad_out),
            DropoutMask::Scales(scales) => {
                if scales.len() != grad_out.len() {
                    return Err(NnError::ShapeMismatch("dropout backward size".into()));
                }
                for (g, s) in grad_out.data_mut().iter_mut().zip(scales) {
                    *g = *g * s;
                }
                Ok(grad_out)
            }
        }
    }
}

/// 2x2 max pooling with stride 2; odd spatial extents are floored, so the
/// last row/column of an odd input is dropped.
#[derive(Debug, Clone)]
pub struct MaxPool<T> {
    in_shape: (usize, usize, usize),
    out_shape: (usize, usize, usize),
    cached_argmax: Option<Vec<u32>>,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Scalar> MaxPool<T> {
    pub fn new(in_shape: (usize, usize, usize)) -> Result<Self, NnError> {
        let (h, w, c) = in_shape;
        if h < 2 || w < 2 {
            return Err(NnError::ShapeMismatch(format!(
                "cannot 2x2-pool a {h}x{w} input"
            )));
        }
        Ok(Self {
            in_shape,
            out_shape: (h / 2, w / 2, c),
            cached_argmax: None,
            _marker: std::marker::PhantomData,
        })
    }

    pub fn out_shape(&self) -> (usize, usize, usize) {
        self.out_shape
    }

    pub fn forward(&mut self, input: &Tensor<T>, train: bool) -> Result<Tensor<T>, NnError> {
        let n = input.batch();
        let (h, w, c) = self.in_shape;
        if input.dims() != [n, h, w, c] {
            return Err(NnError::ShapeMismatch(format!(
                "max pool expected (N, {h}, {w}, {c}), got {:?}",
                input.dims()
            )));
        }
        let (h2, w2, _) = self.out_shape;
        let mut out = Tensor::zeros(&[n, h2, w2, c]);
        let mut argmax = train.then(|| vec![0u32; n * h2 * w2 * c]);
        let data = input.data();
        for item in 0..n {
            let base = item * h * w * c;
            for oh in 0..h2 {
                for ow in 0..w2 {
                    for ch in 0..c {
                        let mut best_idx = base + ((oh * 2) * w + ow * 2) * c + ch;
                        let mut best = data[best_idx];
                        for (dh, dw) in [(0usize, 1usize), (1, 0), (1, 1)] {
                            let idx = base + ((oh * 2 + dh) * w + (ow * 2 + dw)) * c + ch;
                            if data[idx] > best {
                                best = data[idx];
                                best_idx = idx;
                            }
                        }
                        let out_idx = ((item * h2 + oh) * w2 + ow) * c + ch;
                        out.data_mut()[out_idx] = best;
                        if let Some(arg) = argmax.as_mut() {
                            arg[out_idx] = best_idx as u32;
                        }
                    }
                }
            }
        }
        self.cached_argmax = argmax;
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor<T>, batch: usize) -> Result<Tensor<T>, NnError> {
        let argmax = self.cached_argmax.take().ok_or(NnError::StaleForward)?;
        if argmax.len() != grad_out.len() {
            return Err(NnError::ShapeMismatch("max pool backward size".into()));
        }
        let (h, w, c) = self.in_shape;
        let mut grad_in = Tensor::zeros(&[batch, h, w, c]);
        for (&idx, &g) in argmax.iter().zip(grad_out.data()) {
            let slot = &mut grad_in.data_mut()[idx as usize];
            *slot = *slot + g;
        }
        Ok(grad_in)
    }
}

/// Collapses `(N, H, W, C)` into `(N, H*W*C)`; channel-last storage makes
/// this a pure reshape.
#[derive(Debug, Clone, Default)]
pub struct Flatten {
    in_dims: Option<Vec<usize>>,
}

impl Flatten {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward<T: Scalar>(&mut self, input: Tensor<T>) -> Result<Tensor<T>, NnError> {
        let n = input.batch();
        let flat = input.item_len();
        self.in_dims = Some(input.dims().to_vec());
        input.reshaped(&[n, flat])
    }

    pub fn backward<T: Scalar>(&mut self, grad_out: Tensor<T>) -> Result<Tensor<T>, NnError> {
        let dims = self.in_dims.take().ok_or(NnError::StaleForward)?;
        grad_out.reshaped(&dims)
    }
}

/// Softmax over the class axis combined with mean cross-entropy loss.
#[derive(Debug, Clone, Default)]
pub struct SoftmaxCrossEntropy<T> {
    cached_probs: Option<Tensor<T>>,
}

impl<T: Scalar> SoftmaxCrossEntropy<T> {
    pub fn new() -> Self {
        Self { cached_probs: None }
    }

    /// Row-wise softmax probabilities; rows sum to one.
    pub fn forward(&mut self, input: &Tensor<T>, train: bool) -> Result<Tensor<T>, NnError> {
        let n = input.batch();
        let classes = input.item_len();
        if input.dims().len() != 2 || classes == 0 {
            return Err(NnError::ShapeMismatch(format!(
                "softmax expected (N, classes), got {:?}",
                input.dims()
            )));
        }
        let mut probs = Tensor::zeros(&[n, classes]);
        for (row_in, row_out) in input
            .data()
            .chunks_exact(classes)
            .zip(probs.data_mut().chunks_exact_mut(classes))
        {
            let max = row_in.iter().cloned().fold(T::neg_infinity(), T::max);
            let mut sum = T::zero();
            for (o, &v) in row_out.iter_mut().zip(row_in) {
                *o = (v - max).exp();
                sum = sum + *o;
            }
            for o in row_out.iter_mut() {
                *o = *o / sum;
            }
        }
        if train {
            self.cached_probs = Some(probs.clone());
        }
        Ok(probs)
    }

    /// Mean cross-entropy of the cached probabilities against hard labels.
    pub fn loss(&self, targets: &[usize]) -> Result<T, NnError> {
        let probs = self.cached_probs.as_ref().ok_or(NnError::StaleForward)?;
        let n = probs.batch();
        let classes = probs.item_len();
        if targets.len() != n {
            return Err(NnError::ShapeMismatch(format!(
                "{} targets for batch of {n}",
                targets.len()
            )));
        }
        let floor = T::from_f64(1e-300f64.max(f64::MIN_POSITIVE));
        let mut total = T::zero();
        for (row, &y) in probs.data().chunks_exact(classes).zip(targets) {
            if y >= classes {
                return Err(NnError::ConfigInvalid(format!(
                    "target {y} out of range for {classes} classes"
                )));
            }
            total = total - row[y].max(floor).ln();
        }
        Ok(total / T::from_f64(n as f64))
    }

    /// Seeds backpropagation: `(probs - onehot) / N`.
    pub fn backward(&mut self, targets: &[usize]) -> Result<Tensor<T>, NnError> {
        let mut probs = self.cached_probs.take().ok_or(NnError::StaleForward)?;
        let n = probs.batch();
        let classes = probs.item_len();
        if targets.len() != n {
            return Err(NnError::ShapeMismatch(format!(
                "{} targets for batch of {n}",
                targets.len()
            )));
        }
        let inv_n = T::from_f64(1.0 / n as f64);
        for (row, &y) in probs.data_mut().chunks_exact_mut(classes).zip(targets) {
            if y >= classes {
                return Err(NnError::ConfigInvalid(format!(
                    "target {y} out of range for {classes} classes"
                )));
            }
            row[y] = row[y] - T::one();
            for v in row.iter_mut() {
                *v = *v * inv_n;
            }
        }
        Ok(probs)
    }
}
