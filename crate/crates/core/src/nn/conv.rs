//! 2D convolution over channel-last tensors, via im2col and matmul.

use rand::Rng;
use rayon::prelude::*;

use super::tensor::{matmul_accumulate, matmul_transpose_a, matmul_transpose_b, Tensor};
use super::{conv_output_shape, NnError, Scalar};

/// Convolution layer, optionally with a fused ReLU activation.
///
/// Weights are stored as `[F, F, Cin, K]`, which flattens to the
/// `(F*F*Cin) x K` matrix the im2col product consumes directly.
#[derive(Debug, Clone)]
pub struct Conv2d<T: Scalar> {
    pub filters: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub relu: bool,
    in_shape: (usize, usize, usize),
    out_shape: (usize, usize, usize),
    weights: Tensor<T>,
    bias: Tensor<T>,
    cached_input: Option<Tensor<T>>,
    cached_active: Option<Vec<bool>>,
}

impl<T: Scalar> Conv2d<T> {
    pub fn new(
        in_shape: (usize, usize, usize),
        filters: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        relu: bool,
        rng: &mut impl Rng,
    ) -> Result<Self, NnError> {
        let (h, w, c) = in_shape;
        let (h2, w2, d2) = conv_output_shape(h, w, c, kernel, padding, stride, filters)?;
        let fan_in = kernel * kernel * c;
        let fan_out = kernel * kernel * filters;
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let weights = Tensor::from_vec(
            &[kernel, kernel, c, filters],
            (0..fan_in * filters)
                .map(|_| T::from_f64(rng.random_range(-limit..limit)))
                .collect(),
        )?;
        Ok(Self {
            filters,
            kernel,
            stride,
            padding,
            relu,
            in_shape,
            out_shape: (h2, w2, d2),
            weights,
            bias: Tensor::zeros(&[filters]),
            cached_input: None,
            cached_active: None,
        })
    }

    pub fn out_shape(&self) -> (usize, usize, usize) {
        self.out_shape
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

    fn patch_len(&self) -> usize {
        self.kernel * self.kernel * self.in_shape.2
    }

    pub fn forward(&mut self, input: &Tensor<T>, train: bool) -> Result<Tensor<T>, NnError> {
        let n = input.batch();
        let (h, w, c) = self.in_shape;
        if input.dims() != [n, h, w, c] {
            return Err(NnError::ShapeMismatch(format!(
                "conv2d expected (N, {h}, {w}, {c}), got {:?}",
                input.dims()
            )));
        }
        let (h2, w2, k) = self.out_shape;
        let mut output = Tensor::zeros(&[n, h2, w2, k]);
        let in_item = h * w * c;
        let out_item = h2 * w2 * k;
        let patch = self.patch_len();
        let rows = h2 * w2;

        output
            .data_mut()
            .par_chunks_mut(out_item)
            .zip(input.data().par_chunks(in_item))
            .for_each(|(out, item)| {
                let mut cols = vec![T::zero(); rows * patch];
                im2col(
                    item,
                    (h, w, c),
                    self.kernel,
                    self.stride,
                    self.padding,
                    (h2, w2),
                    &mut cols,
                );
                matmul_accumulate(&cols, self.weights.data(), rows, patch, k, out);
                for row in out.chunks_mut(k) {
                    for (v, &b) in row.iter_mut().zip(self.bias.data()) {
                        *v = *v + b;
                    }
                }
                if self.relu {
                    for v in out.iter_mut() {
                        if *v < T::zero() {
                            *v = T::zero();
                        }
                    }
                }
            });

        if train {
            self.cached_active = self
                .relu
                .then(|| output.data().iter().map(|&v| v > T::zero()).collect());
            self.cached_input = Some(input.clone());
        } else {
            self.cached_input = None;
            self.cached_active = None;
        }
        Ok(output)
    }

    /// Returns `(grad_input, grad_weights, grad_bias)`.
    ///
    /// Per-item weight and bias contributions are computed in parallel and
    /// reduced in item order, so gradients are identical for any worker
    /// count.
    pub fn backward(
        &mut self,
        grad_out: &Tensor<T>,
    ) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>), NnError> {
        let input = self.cached_input.take().ok_or(NnError::StaleForward)?;
        let active = self.cached_active.take();
        let n = input.batch();
        let (h, w, c) = self.in_shape;
        let (h2, w2, k) = self.out_shape;
        if grad_out.dims() != [n, h2, w2, k] {
            return Err(NnError::ShapeMismatch(format!(
                "conv2d backward expected (N, {h2}, {w2}, {k}), got {:?}",
                grad_out.dims()
            )));
        }
        let in_item = h * w * c;
        let out_item = h2 * w2 * k;
        let patch = self.patch_len();
        let rows = h2 * w2;

        let mut grad_in = Tensor::zeros(&[n, h, w, c]);
        let per_item: Vec<(Vec<T>, Vec<T>)> = grad_in
            .data_mut()
            .par_chunks_mut(in_item)
            .zip(input.data().par_chunks(in_item))
            .zip(grad_out.data().par_chunks(out_item))
            .enumerate()
            .map(|(item_idx, ((gin, item), gout))| {
                let mut g = gout.to_vec();
                if let Some(active) = &active {
                    let mask = &active[item_idx * out_item..(item_idx + 1) * out_item];
                    for (gv, &keep) in g.iter_mut().zip(mask) {
                        if !keep {
                            *gv = T::zero();
                        }
                    }
                }

                let mut cols = vec![T::zero(); rows * patch];
                im2col(
                    item,
                    (h, w, c),
                    self.kernel,
                    self.stride,
                    self.padding,
                    (h2, w2),
                    &mut cols,
                );

                let dw = matmul_transpose_a(&cols, &g, rows, patch, k);
                let mut db = vec![T::zero(); k];
                for row in g.chunks(k) {
                    for (acc, &gv) in db.iter_mut().zip(row) {
                        *acc = *acc + gv;
                    }
                }

                let dcols = matmul_transpose_b(&g, self.weights.data(), rows, k, patch);
                col2im_add(
                    &dcols,
                    (h, w, c),
                    self.kernel,
                    self.stride,
                    self.padding,
                    (h2, w2),
                    gin,
                );
                (dw, db)
            })
            .collect();

        let mut grad_w = Tensor::zeros(&[self.kernel, self.kernel, c, k]);
        let mut grad_b = Tensor::zeros(&[k]);
        for (dw, db) in per_item {
            for (acc, v) in grad_w.data_mut().iter_mut().zip(dw) {
                *acc = *acc + v;
            }
            for (acc, v) in grad_b.data_mut().iter_mut().zip(db) {
                *acc = *acc + v;
            }
        }
        Ok((grad_in, grad_w, grad_b))
    }
}

/// Unrolls padded patches of one item into a `(H2*W2) x (F*F*C)` matrix.
/// `cols` must be zeroed by the caller.
fn im2col<T: Scalar>(
    item: &[T],
    (h, w, c): (usize, usize, usize),
    kernel: usize,
    stride: usize,
    padding: usize,
    (h2, w2): (usize, usize),
    cols: &mut [T],
) {
    let patch = kernel * kernel * c;
    for oh in 0..h2 {
        for ow in 0..w2 {
            let row = (oh * w2 + ow) * patch;
            for kh in 0..kernel {
                let ih = (oh * stride + kh) as isize - padding as isize;
                if ih < 0 || ih as usize >= h {
                    continue;
                }
                for kw in 0..kernel {
                    let iw = (ow * stride + kw) as isize - padding as isize;
                    if iw < 0 || iw as usize >= w {
                        continue;
                    }
                    let dst = row + (kh * kernel + kw) * c;
                    let src = (ih as usize * w + iw as usize) * c;
                    cols[dst..dst + c].copy_from_slice(&item[src..src + c]);
                }
            }
        }
    }
}

/// Scatter-adds patch gradients back onto one item's gradient buffer.
fn col2im_add<T: Scalar>(
    cols: &[T],
    (h, w, c): (usize, usize, usize),
    kernel: usize,
    stride: usize,
    padding: usize,
    (h2, w2): (usize, usize),
    item: &mut [T],
) {
    let patch = kernel * kernel * c;
    for oh in 0..h2 {
        for ow in 0..w2 {
            let row = (oh * w2 + ow) * patch;
            for kh in 0..kernel {
                let ih = (oh * stride + kh) as isize - padding as isize;
                if ih < 0 || ih as usize >= h {
                    continue;
                }
                for kw in 0..kernel {
                    let iw = (ow * stride + kw) as isize - padding as isize;
                    if iw < 0 || iw as usize >= w {
                        continue;
                    }
                    let src = row + (kh * kernel + kw) * c;
                    let dst = (ih as usize * w + iw as usize) * c;
                    for ch in 0..c {
                        item[dst + ch] = item[dst + ch] + cols[src + ch];
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Direct convolution oracle for one item, channel-last, zero padding.
    fn direct_conv(
        item: &[f64],
        (h, w, c): (usize, usize, usize),
        weights: &[f64], // [F, F, C, K]
        bias: &[f64],
        kernel: usize,
        stride: usize,
        padding: usize,
        (h2, w2, k): (usize, usize, usize),
    ) -> Vec<f64> {
        let mut out = vec![0.0; h2 * w2 * k];
        for oh in 0..h2 {
            for ow in 0..w2 {
                for kk in 0..k {
                    let mut acc = bias[kk];
                    for kh in 0..kernel {
                        for kw in 0..kernel {
                            let ih = (oh * stride + kh) as isize - padding as isize;
                            let iw = (ow * stride + kw) as isize - padding as isize;
                            if ih < 0 || iw < 0 || ih as usize >= h || iw as usize >= w {
                                continue;
                            }
                            for ch in 0..c {
                                let x = item[(ih as usize * w + iw as usize) * c + ch];
                                let wv = weights[((kh * kernel + kw) * c + ch) * k + kk];
                                acc += x * wv;
                            }
                        }
                    }
                    out[(oh * w2 + ow) * k + kk] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn forward_matches_direct_convolution() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let (h, w, c, k) = (5, 6, 3, 4);
        let mut layer = Conv2d::<f64>::new((h, w, c), k, 3, 1, 1, false, &mut rng).unwrap();
        for b in layer.bias_mut().data_mut() {
            *b = rng.random_range(-0.5..0.5);
        }
        let input = Tensor::from_vec(
            &[2, h, w, c],
            (0..2 * h * w * c)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
        )
        .unwrap();
        let out = layer.forward(&input, false).unwrap();
        assert_eq!(out.dims(), [2, h, w, k]);
        for item in 0..2 {
            let expected = direct_conv(
                &input.data()[item * h * w * c..(item + 1) * h * w * c],
                (h, w, c),
                layer.weights().data(),
                layer.bias().data(),
                3,
                1,
                1,
                (h, w, k),
            );
            let got = &out.data()[item * h * w * k..(item + 1) * h * w * k];
            for (g, e) in got.iter().zip(&expected) {
                assert!((g - e).abs() < 1e-12, "{g} vs {e}");
            }
        }
    }

    #[test]
    fn same_geometry_preserves_spatial_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let layer = Conv2d::<f32>::new((100, 150, 1), 32, 3, 1, 1, true, &mut rng).unwrap();
        assert_eq!(layer.out_shape(), (100, 150, 32));
        assert_eq!(layer.weights().len() + layer.bias().len(), 320);
    }

    #[test]
    fn backward_without_forward_is_stale() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut layer = Conv2d::<f32>::new((4, 4, 1), 2, 3, 1, 1, false, &mut rng).unwrap();
        let g = Tensor::zeros(&[1, 4, 4, 2]);
        assert!(matches!(layer.backward(&g), Err(NnError::StaleForward)));
    }

    #[test]
    fn gradient_dims_match_parameter_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut layer = Conv2d::<f64>::new((4, 5, 2), 3, 3, 1, 1, true, &mut rng).unwrap();
        let input = Tensor::from_vec(
            &[2, 4, 5, 2],
            (0..80).map(|v| (v as f64 * 0.37).sin()).collect(),
        )
        .unwrap();
        let out = layer.forward(&input, true).unwrap();
        let (gin, gw, gb) = layer.backward(&Tensor::zeros(out.dims())).unwrap();
        assert_eq!(gin.dims(), input.dims());
        assert_eq!(gw.dims(), layer.weights().dims());
        assert_eq!(gb.dims(), layer.bias().dims());
    }
}
