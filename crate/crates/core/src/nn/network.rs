//! Layer stack assembly, forward/backward orchestration, and the
//! finite-difference gradient checker.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::conv::Conv2d;
use super::dense::Dense;
use super::layers::{Dropout, Flatten, MaxPool, Relu, SoftmaxCrossEntropy};
use super::norm::BatchNorm;
use super::optim::{optimizer_step, AdamParams, AdamState};
use super::tensor::Tensor;
use super::{LayerSpec, NnError, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

pub enum Layer<T: Scalar> {
    Conv2d(Conv2d<T>),
    BatchNorm(BatchNorm<T>),
    Relu(Relu<T>),
    Dropout(Dropout<T>),
    MaxPool(MaxPool<T>),
    Flatten(Flatten),
    Dense(Dense<T>),
    Softmax(SoftmaxCrossEntropy<T>),
}

/// One row of the model summary: layer name, per-item output shape, and
/// parameter count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSummary {
    pub name: String,
    pub output_shape: Vec<usize>,
    pub params: usize,
}

#[derive(Clone, Copy)]
enum Shape {
    Spatial(usize, usize, usize),
    Flat(usize),
}

impl Shape {
    fn dims(&self) -> Vec<usize> {
        match *self {
            Shape::Spatial(h, w, c) => vec![h, w, c],
            Shape::Flat(d) => vec![d],
        }
    }

    fn channels(&self) -> usize {
        match *self {
            Shape::Spatial(_, _, c) => c,
            Shape::Flat(d) => d,
        }
    }
}

/// An ordered layer stack with named parameters and a train/eval mode.
pub struct Network<T: Scalar> {
    layers: Vec<(String, Layer<T>)>,
    summaries: Vec<LayerSummary>,
    input_dims: Vec<usize>,
    mode: Mode,
    ready_for_backward: bool,
}

fn stream_seed(master: u64, layer_index: usize, purpose: u64) -> u64 {
    master
        .wrapping_add((layer_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(purpose.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

impl<T: Scalar> Network<T> {
    /// Builds a network from layer specs, checking that shapes chain
    /// consistently. `input_shape` is the per-item shape: `[H, W, C]` for
    /// images or `[D]` for flat inputs. Initialization is Glorot-uniform,
    /// seeded per layer from `seed`.
    pub fn from_specs(
        specs: &[LayerSpec],
        input_shape: &[usize],
        seed: u64,
    ) -> Result<Self, NnError> {
        let mut shape = match *input_shape {
            [h, w, c] => Shape::Spatial(h, w, c),
            [d] => Shape::Flat(d),
            _ => {
                return Err(NnError::ConfigInvalid(format!(
                    "input shape {input_shape:?} must be [H, W, C] or [D]"
                )))
            }
        };
        let mut layers = Vec::with_capacity(specs.len());
        let mut summaries = Vec::with_capacity(specs.len());
        let mut counters: std::collections::HashMap<&'static str, usize> =
            std::collections::HashMap::new();
        let mut next_name = |kind: &'static str| {
            let c = counters.entry(kind).or_insert(0);
            *c += 1;
            format!("{kind}_{c}")
        };

        for (idx, spec) in specs.iter().enumerate() {
            if matches!(layers.last(), Some((_, Layer::Softmax(_)))) {
                return Err(NnError::ConfigInvalid(
                    "softmax cross-entropy must be the final layer".into(),
                ));
            }
            let params = super::param_count(spec, shape.channels());
            let (name, layer, out_shape) = match *spec {
                LayerSpec::Conv2D {
                    filters,
                    kernel,
                    stride,
                    padding,
                    relu,
                } => {
                    let Shape::Spatial(h, w, c) = shape else {
                        return Err(NnError::ShapeMismatch(
                            "conv2d requires a spatial input".into(),
                        ));
                    };
                    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, idx, 0));
                    let conv =
                        Conv2d::new((h, w, c), filters, kernel, stride, padding, relu, &mut rng)?;
                    let out = conv.out_shape();
                    (
                        next_name("conv2d"),
                        Layer::Conv2d(conv),
                        Shape::Spatial(out.0, out.1, out.2),
                    )
                }
                LayerSpec::BatchNorm { epsilon, momentum } => (
                    next_name("batch_normalization"),
                    Layer::BatchNorm(BatchNorm::new(shape.channels(), epsilon, momentum)),
                    shape,
                ),
                LayerSpec::Relu => (next_name("activation"), Layer::Relu(Relu::new()), shape),
                LayerSpec::Dropout { rate } => (
                    next_name("dropout"),
                    Layer::Dropout(Dropout::new(rate, stream_seed(seed, idx, 1))?),
                    shape,
                ),
                LayerSpec::MaxPool => {
                    let Shape::Spatial(h, w, c) = shape else {
                        return Err(NnError::ShapeMismatch(
                            "max pooling requires a spatial input".into(),
                        ));
                    };
                    let pool = MaxPool::new((h, w, c))?;
                    let out = pool.out_shape();
                    (
                        next_name("max_pooling2d"),
                        Layer::MaxPool(pool),
                        Shape::Spatial(out.0, out.1, out.2),
                    )
                }
                LayerSpec::Flatten => {
                    let Shape::Spatial(h, w, c) = shape else {
                        return Err(NnError::ShapeMismatch("input is already flat".into()));
                    };
                    (
                        next_name("flatten"),
                        Layer::Flatten(Flatten::new()),
                        Shape::Flat(h * w * c),
                    )
                }
                LayerSpec::Dense { units } => {
                    let Shape::Flat(d) = shape else {
                        return Err(NnError::ShapeMismatch(
                            "dense requires a flat input; add a flatten layer".into(),
                        ));
                    };
                    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, idx, 0));
                    (
                        next_name("dense"),
                        Layer::Dense(Dense::new(d, units, &mut rng)),
                        Shape::Flat(units),
                    )
                }
                LayerSpec::SoftmaxCrossEntropy => {
                    let Shape::Flat(_) = shape else {
                        return Err(NnError::ShapeMismatch(
                            "softmax requires a flat input".into(),
                        ));
                    };
                    (
                        next_name("softmax"),
                        Layer::Softmax(SoftmaxCrossEntropy::new()),
                        shape,
                    )
                }
            };
            shape = out_shape;
            summaries.push(LayerSummary {
                name: name.clone(),
                output_shape: shape.dims(),
                params,
            });
            layers.push((name, layer));
        }

        Ok(Self {
            layers,
            summaries,
            input_dims: input_shape.to_vec(),
            mode: Mode::Eval,
            ready_for_backward: false,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
        self.ready_for_backward = false;
    }

    pub fn summary(&self) -> &[LayerSummary] {
        &self.summaries
    }

    pub fn input_dims(&self) -> &[usize] {
        &self.input_dims
    }

    /// Per-item output shape of the final layer.
    pub fn output_dims(&self) -> Vec<usize> {
        self.summaries
            .last()
            .map(|s| s.output_shape.clone())
            .unwrap_or_else(|| self.input_dims.clone())
    }

    pub fn total_params(&self) -> usize {
        self.summaries.iter().map(|s| s.params).sum()
    }

    /// Reseeds every dropout stream, for reproducible training runs.
    pub fn reseed_dropout(&mut self, seed: u64) {
        for (idx, (_, layer)) in self.layers.iter_mut().enumerate() {
            if let Layer::Dropout(d) = layer {
                d.reseed(stream_seed(seed, idx, 1));
            }
        }
    }

    /// True when any dropout layer would randomize a training forward pass.
    pub fn has_active_dropout(&self) -> bool {
        self.layers
            .iter()
            .any(|(_, l)| matches!(l, Layer::Dropout(d) if d.rate > 0.0))
    }

    /// Runs the stack over a batch. In train mode layers cache what their
    /// backward pass needs; in eval mode the pass is cache-free and
    /// bit-deterministic.
    pub fn forward(&mut self, batch: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let n = batch.batch();
        let expected: Vec<usize> = std::iter::once(n).chain(self.input_dims.clone()).collect();
        if batch.dims() != expected || n == 0 {
            return Err(NnError::ShapeMismatch(format!(
                "network expected {expected:?}, got {:?}",
                batch.dims()
            )));
        }
        let train = self.mode == Mode::Train;
        let mut x = batch.clone();
        for (_, layer) in &mut self.layers {
            x = match layer {
                Layer::Conv2d(l) => l.forward(&x, train)?,
                Layer::BatchNorm(l) => l.forward(&x, train)?,
                Layer::Relu(l) => l.forward(x, train),
                Layer::Dropout(l) => l.forward(x, train),
                Layer::MaxPool(l) => l.forward(&x, train)?,
                Layer::Flatten(l) => l.forward(x)?,
                Layer::Dense(l) => l.forward(&x, train)?,
                Layer::Softmax(l) => l.forward(&x, train)?,
            };
        }
        self.ready_for_backward = train;
        Ok(x)
    }

    /// Mean cross-entropy of the most recent train-mode forward pass.
    pub fn loss(&self, targets: &[usize]) -> Result<T, NnError> {
        match self.layers.last() {
            Some((_, Layer::Softmax(sm))) => sm.loss(targets),
            _ => Err(NnError::ConfigInvalid(
                "loss requires a softmax cross-entropy head".into(),
            )),
        }
    }

    /// Convenience for gradient checking: forward pass plus loss.
    pub fn forward_loss(&mut self, batch: &Tensor<T>, targets: &[usize]) -> Result<T, NnError> {
        self.forward(batch)?;
        self.loss(targets)
    }

    /// Backpropagates from the softmax head, returning one gradient tensor
    /// per trainable parameter, in layer order.
    pub fn backward(&mut self, targets: &[usize]) -> Result<Vec<(String, Tensor<T>)>, NnError> {
        if !self.ready_for_backward {
            return Err(NnError::StaleForward);
        }
        self.ready_for_backward = false;

        let mut grads: Vec<(String, Tensor<T>)> = Vec::new();
        let mut iter = self.layers.iter_mut().rev();
        let mut g = match iter.next() {
            Some((_, Layer::Softmax(sm))) => sm.backward(targets)?,
            _ => {
                return Err(NnError::ConfigInvalid(
                    "backward requires a softmax cross-entropy head".into(),
                ))
            }
        };
        for (name, layer) in iter {
            g = match layer {
                Layer::Conv2d(l) => {
                    let (gin, gw, gb) = l.backward(&g)?;
                    grads.push((format!("{name}.bias"), gb));
                    grads.push((format!("{name}.kernel"), gw));
                    gin
                }
                Layer::BatchNorm(l) => {
                    let (gin, gg, gb) = l.backward(&g)?;
                    grads.push((format!("{name}.beta"), gb));
                    grads.push((format!("{name}.gamma"), gg));
                    gin
                }
                Layer::Relu(l) => l.backward(g)?,
                Layer::Dropout(l) => l.backward(g)?,
                Layer::MaxPool(l) => {
                    let batch = g.batch();
                    l.backward(&g, batch)?
                }
                Layer::Flatten(l) => l.backward(g)?,
                Layer::Dense(l) => {
                    let (gin, gw, gb) = l.backward(&g)?;
                    grads.push((format!("{name}.bias"), gb));
                    grads.push((format!("{name}.kernel"), gw));
                    gin
                }
                Layer::Softmax(_) => {
                    return Err(NnError::ConfigInvalid(
                        "softmax must be the final layer".into(),
                    ))
                }
            };
        }
        grads.reverse();
        Ok(grads)
    }

    /// All named parameters in layer order: kernels, biases, batch-norm
    /// scale/shift, and batch-norm running statistics.
    pub fn named_params(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        for (name, layer) in &self.layers {
            match layer {
                Layer::Conv2d(l) => {
                    out.push((format!("{name}.kernel"), l.weights()));
                    out.push((format!("{name}.bias"), l.bias()));
                }
                Layer::Dense(l) => {
                    out.push((format!("{name}.kernel"), l.weights()));
                    out.push((format!("{name}.bias"), l.bias()));
                }
                Layer::BatchNorm(l) => {
                    out.push((format!("{name}.gamma"), l.gamma()));
                    out.push((format!("{name}.beta"), l.beta()));
                    out.push((format!("{name}.running_mean"), l.running_mean()));
                    out.push((format!("{name}.running_var"), l.running_var()));
                }
                _ => {}
            }
        }
        out
    }

    /// Mutable access to the trainable parameters (running statistics are
    /// excluded; the forward pass owns those).
    pub fn trainable_params_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        let mut out = Vec::new();
        for (name, layer) in &mut self.layers {
            match layer {
                Layer::Conv2d(l) => {
                    let (w, b) = l.weights_bias_mut();
                    out.push((format!("{name}.kernel"), w));
                    out.push((format!("{name}.bias"), b));
                }
                Layer::Dense(l) => {
                    let (w, b) = l.weights_bias_mut();
                    out.push((format!("{name}.kernel"), w));
                    out.push((format!("{name}.bias"), b));
                }
                Layer::BatchNorm(l) => {
                    let (g, b) = l.gamma_beta_mut();
                    out.push((format!("{name}.gamma"), g));
                    out.push((format!("{name}.beta"), b));
                }
                _ => {}
            }
        }
        out
    }

    /// Looks up one parameter tensor (trainable or running) by full name.
    pub fn param_tensor_mut(&mut self, full_name: &str) -> Option<&mut Tensor<T>> {
        let (layer_name, field) = full_name.rsplit_once('.')?;
        for (name, layer) in &mut self.layers {
            if name != layer_name {
                continue;
            }
            return match (layer, field) {
                (Layer::Conv2d(l), "kernel") => Some(l.weights_mut()),
                (Layer::Conv2d(l), "bias") => Some(l.bias_mut()),
                (Layer::Dense(l), "kernel") => Some(l.weights_mut()),
                (Layer::Dense(l), "bias") => Some(l.bias_mut()),
                (Layer::BatchNorm(l), "gamma") => Some(l.gamma_mut()),
                (Layer::BatchNorm(l), "beta") => Some(l.beta_mut()),
                (Layer::BatchNorm(l), "running_mean") => Some(l.running_mean_mut()),
                (Layer::BatchNorm(l), "running_var") => Some(l.running_var_mut()),
                _ => None,
            };
        }
        None
    }

    /// One Adam step over the trainable parameters.
    pub fn apply_gradients(
        &mut self,
        grads: &[(String, Tensor<T>)],
        state: &mut AdamState<T>,
        hyper: &AdamParams,
    ) -> Result<(), NnError> {
        let mut params = self.trainable_params_mut();
        optimizer_step(&mut params, grads, state, hyper)
    }
}

/// Below this magnitude, analytic and numeric gradients are treated as
/// agreeing at zero. A parameter can have an exactly-zero true gradient
/// (a conv bias feeding batch norm is cancelled by the mean subtraction),
/// where finite differences measure nothing but rounding noise.
pub const ZERO_GRADIENT_GUARD: f64 = 1e-7;

/// Central-difference gradient validation, per parameter tensor.
///
/// Runs an analytic backward pass, then for `samples_per_tensor` randomly
/// chosen entries of every trainable tensor compares the analytic gradient
/// with `(L(p + eps) - L(p - eps)) / (2 eps)`. Returns, per tensor, the
/// maximum of `|a - n| / max(|a|, |n|, 1e-8)` over its sampled entries;
/// entries where both values sit below [`ZERO_GRADIENT_GUARD`] count as
/// exact agreement.
///
/// The network must have dropout disabled so repeated forward passes are
/// deterministic; batch norm runs in train mode with batch statistics.
pub fn gradient_check_detailed<T: Scalar>(
    net: &mut Network<T>,
    batch: &Tensor<T>,
    targets: &[usize],
    eps: f64,
    samples_per_tensor: usize,
    seed: u64,
) -> Result<Vec<(String, f64)>, NnError> {
    if !(eps > 0.0) {
        return Err(NnError::ConfigInvalid(format!(
            "finite-difference eps {eps} must be > 0"
        )));
    }
    if samples_per_tensor == 0 {
        return Err(NnError::ConfigInvalid("samples_per_tensor must be > 0".into()));
    }
    if net.has_active_dropout() {
        return Err(NnError::NondeterministicNetwork);
    }

    net.set_mode(Mode::Train);
    net.forward(batch)?;
    let grads = net.backward(targets)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = Vec::with_capacity(grads.len());
    let eps_t = T::from_f64(eps);

    for (name, grad) in &grads {
        let len = grad.len();
        let k = samples_per_tensor.min(len);
        let picks = rand::seq::index::sample(&mut rng, len, k);
        let mut max_rel = 0.0f64;
        for idx in picks {
            let original = {
                let p = net
                    .param_tensor_mut(name)
                    .ok_or_else(|| NnError::NameMismatch(name.clone()))?;
                let v = p.data()[idx];
                p.data_mut()[idx] = v + eps_t;
                v
            };
            let loss_plus = net.forward_loss(batch, targets)?.to_f64s();
            net.param_tensor_mut(name).unwrap().data_mut()[idx] = original - eps_t;
            let loss_minus = net.forward_loss(batch, targets)?.to_f64s();
            net.param_tensor_mut(name).unwrap().data_mut()[idx] = original;

            let numeric = (loss_plus - loss_minus) / (2.0 * eps);
            let analytic = grad.data()[idx].to_f64s();
            if analytic.abs().max(numeric.abs()) < ZERO_GRADIENT_GUARD {
                continue;
            }
            let rel =
                (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            if rel > max_rel {
                max_rel = rel;
            }
        }
        report.push((name.clone(), max_rel));
    }
    Ok(report)
}

/// Maximum relative gradient error over all sampled parameters; see
/// [`gradient_check_detailed`].
pub fn gradient_check<T: Scalar>(
    net: &mut Network<T>,
    batch: &Tensor<T>,
    targets: &[usize],
    eps: f64,
    samples_per_tensor: usize,
    seed: u64,
) -> Result<f64, NnError> {
    let report = gradient_check_detailed(net, batch, targets, eps, samples_per_tensor, seed)?;
    Ok(report.into_iter().map(|(_, e)| e).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_stack() -> Vec<LayerSpec> {
        vec![
            LayerSpec::conv_same(3, false),
            LayerSpec::BatchNorm {
                epsilon: 1e-3,
                momentum: 0.99,
            },
            LayerSpec::Relu,
            LayerSpec::Dropout { rate: 0.0 },
            LayerSpec::conv_same(4, true),
            LayerSpec::MaxPool,
            LayerSpec::Flatten,
            LayerSpec::Dense { units: 10 },
            LayerSpec::Dense { units: 5 },
            LayerSpec::SoftmaxCrossEntropy,
        ]
    }

    fn batch(seed: u64, dims: &[usize]) -> Tensor<f64> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = dims.iter().product();
        Tensor::from_vec(dims, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn shapes_chain_through_the_stack() {
        let net = Network::<f32>::from_specs(&small_stack(), &[6, 8, 2], 0).unwrap();
        let shapes: Vec<Vec<usize>> =
            net.summary().iter().map(|s| s.output_shape.clone()).collect();
        assert_eq!(
            shapes,
            vec![
                vec![6, 8, 3],
                vec![6, 8, 3],
                vec![6, 8, 3],
                vec![6, 8, 3],
                vec![6, 8, 4],
                vec![3, 4, 4],
                vec![48],
                vec![10],
                vec![5],
                vec![5],
            ]
        );
    }

    #[test]
    fn invalid_chains_are_rejected() {
        assert!(Network::<f32>::from_specs(&[LayerSpec::Dense { units: 3 }], &[4, 4, 1], 0)
            .is_err());
        assert!(Network::<f32>::from_specs(
            &[LayerSpec::SoftmaxCrossEntropy, LayerSpec::Relu],
            &[8],
            0
        )
        .is_err());
        assert!(Network::<f32>::from_specs(&[LayerSpec::conv_same(2, false)], &[8], 0).is_err());
    }

    #[test]
    fn eval_forward_is_bit_stable() {
        let mut net = Network::<f32>::from_specs(&small_stack(), &[6, 8, 2], 1).unwrap();
        let x = batch(3, &[2, 6, 8, 2]).cast::<f32>();
        let a = net.forward(&x).unwrap();
        let b = net.forward(&x).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn backward_requires_fresh_train_forward() {
        let mut net = Network::<f64>::from_specs(&small_stack(), &[6, 8, 2], 1).unwrap();
        let x = batch(4, &[1, 6, 8, 2]);
        assert!(matches!(net.backward(&[0]), Err(NnError::StaleForward)));
        net.forward(&x).unwrap(); // eval mode: still stale
        assert!(matches!(net.backward(&[0]), Err(NnError::StaleForward)));
        net.set_mode(Mode::Train);
        net.forward(&x).unwrap();
        assert!(net.backward(&[0]).is_ok());
        assert!(matches!(net.backward(&[0]), Err(NnError::StaleForward)));
    }

    #[test]
    fn gradient_dims_match_parameter_dims() {
        let mut net = Network::<f64>::from_specs(&small_stack(), &[6, 8, 2], 1).unwrap();
        net.set_mode(Mode::Train);
        let x = batch(5, &[2, 6, 8, 2]);
        net.forward(&x).unwrap();
        let grads = net.backward(&[0, 3]).unwrap();
        let params = net.named_params();
        for (name, g) in &grads {
            let (_, p) = params.iter().find(|(n, _)| n == name).expect(name);
            assert_eq!(g.dims(), p.dims(), "{name}");
        }
        // Running stats are tracked but not trained.
        assert_eq!(grads.len(), params.len() - 2);
    }

    #[test]
    fn gradients_vanish_at_a_perfect_prediction() {
        // Saturate the softmax with a huge correct logit: loss ~ 0, grads ~ 0.
        let mut net =
            Network::<f64>::from_specs(&[LayerSpec::Dense { units: 2 }, LayerSpec::SoftmaxCrossEntropy], &[2], 7)
                .unwrap();
        if let Some(p) = net.param_tensor_mut("dense_1.kernel") {
            p.data_mut().copy_from_slice(&[40.0, -40.0, 40.0, -40.0]);
        }
        net.set_mode(Mode::Train);
        let x = Tensor::from_vec(&[1, 2], vec![1.0, 1.0]).unwrap();
        net.forward(&x).unwrap();
        assert!(net.loss(&[0]).unwrap() < 1e-9);
        let grads = net.backward(&[0]).unwrap();
        for (name, g) in grads {
            for v in g.data() {
                assert!(v.abs() < 1e-9, "{name}: {v}");
            }
        }
    }

    #[test]
    fn gradient_check_validates_dense_softmax() {
        let mut net = Network::<f64>::from_specs(
            &[LayerSpec::Dense { units: 4 }, LayerSpec::SoftmaxCrossEntropy],
            &[3],
            11,
        )
        .unwrap();
        let x = batch(6, &[5, 3]);
        let err = gradient_check(&mut net, &x, &[0, 1, 2, 3, 0], 1e-5, 64, 0).unwrap();
        assert!(err < 1e-7, "max rel err {err}");
    }

    #[test]
    fn gradient_check_validates_every_layer_kind_in_one_stack() {
        let mut net = Network::<f64>::from_specs(&small_stack(), &[6, 8, 2], 13).unwrap();
        let x = batch(7, &[3, 6, 8, 2]);
        let err = gradient_check(&mut net, &x, &[0, 2, 4], 1e-5, 24, 1).unwrap();
        assert!(err < 1e-4, "max rel err {err}");
    }

    #[test]
    fn gradient_check_rejects_active_dropout_and_bad_eps() {
        let mut specs = small_stack();
        specs[3] = LayerSpec::Dropout { rate: 0.25 };
        let mut net = Network::<f64>::from_specs(&specs, &[6, 8, 2], 1).unwrap();
        let x = batch(8, &[1, 6, 8, 2]);
        assert!(matches!(
            gradient_check(&mut net, &x, &[0], 1e-5, 8, 0),
            Err(NnError::NondeterministicNetwork)
        ));
        let mut net = Network::<f64>::from_specs(&small_stack(), &[6, 8, 2], 1).unwrap();
        assert!(matches!(
            gradient_check(&mut net, &x, &[0], 0.0, 8, 0),
            Err(NnError::ConfigInvalid(_))
        ));
    }
}
