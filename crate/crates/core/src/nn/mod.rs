//! Minimal tensor-and-layer engine: forward, backward, gradient checking,
//! and Adam. Layers cover exactly what the classifier needs — Conv2D,
//! BatchNorm, ReLU, Dropout, 2x2 MaxPool, Flatten, Dense, and softmax
//! cross-entropy — over channel-last `(N, H, W, C)` tensors.
//!
//! Everything is generic over the scalar type: training runs in `f32`,
//! gradient checks in `f64`.

mod conv;
mod dense;
mod layers;
mod network;
mod norm;
mod optim;
mod tensor;

pub use conv::Conv2d;
pub use dense::Dense;
pub use layers::{Dropout, Flatten, MaxPool, Relu, SoftmaxCrossEntropy};
pub use network::{gradient_check, gradient_check_detailed, Layer, LayerSummary, Mode, Network};
pub use norm::BatchNorm;
pub use optim::{optimizer_step, AdamParams, AdamState};
pub use tensor::Tensor;

use std::fmt::Debug;

/// Scalar element type of tensors and parameters.
pub trait Scalar: num_traits::Float + Debug + Default + Send + Sync + 'static {
    fn from_f64(v: f64) -> Self {
        <Self as num_traits::NumCast>::from(v).expect("f64 conversion")
    }

    fn to_f64s(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("f64 conversion")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("non-integral convolution geometry: ({extent} - {kernel} + 2*{padding}) not divisible by stride {stride}")]
    GeometryError {
        extent: usize,
        kernel: usize,
        padding: usize,
        stride: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("backward called without a cached forward pass")]
    StaleForward,

    #[error("network is nondeterministic (active dropout); disable dropout for gradient checks")]
    NondeterministicNetwork,

    #[error("parameter name mismatch: {0}")]
    NameMismatch(String),

    #[error("invalid config: {0}")]
    ConfigInvalid(String),
}

/// Declarative description of one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerSpec {
    /// 2D convolution; `relu` fuses the activation into the layer.
    Conv2D {
        filters: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        relu: bool,
    },
    BatchNorm { epsilon: f64, momentum: f64 },
    Relu,
    Dropout { rate: f64 },
    /// 2x2 max pooling with stride 2; odd extents lose their last row/column.
    MaxPool,
    Flatten,
    Dense { units: usize },
    SoftmaxCrossEntropy,
}

impl LayerSpec {
    /// Convenience constructor for the stack's standard 3x3/stride-1/pad-1
    /// convolution.
    pub fn conv_same(filters: usize, relu: bool) -> Self {
        LayerSpec::Conv2D {
            filters,
            kernel: 3,
            stride: 1,
            padding: 1,
            relu,
        }
    }
}

fn conv_extent(extent: usize, kernel: usize, padding: usize, stride: usize) -> Result<usize, NnError> {
    let padded = extent + 2 * padding;
    if padded < kernel || (padded - kernel) % stride != 0 {
        return Err(NnError::GeometryError {
            extent,
            kernel,
            padding,
            stride,
        });
    }
    Ok((padded - kernel) / stride + 1)
}

/// Output volume of a convolution: `W2 = (W1 - F + 2P) / S + 1`, the same
/// for H, and depth equal to the filter count. Non-integral geometry is an
/// error.
pub fn conv_output_shape(
    width: usize,
    height: usize,
    _depth: usize,
    kernel: usize,
    padding: usize,
    stride: usize,
    filters: usize,
) -> Result<(usize, usize, usize), NnError> {
    if stride == 0 || kernel == 0 {
        return Err(NnError::ConfigInvalid(
            "kernel and stride must be positive".into(),
        ));
    }
    let w2 = conv_extent(width, kernel, padding, stride)?;
    let h2 = conv_extent(height, kernel, padding, stride)?;
    Ok((w2, h2, filters))
}

/// Trainable-plus-tracked parameter count of a layer given its input depth
/// (for `Dense`, the incoming feature count).
///
/// Conv2D carries `F*F*D1` weights per filter plus one bias per filter;
/// BatchNorm carries scale, shift, and the two running statistics per
/// channel.
pub fn param_count(layer: &LayerSpec, input_depth: usize) -> usize {
    match *layer {
        LayerSpec::Conv2D {
            filters, kernel, ..
        } => kernel * kernel * input_depth * filters + filters,
        LayerSpec::Dense { units } => input_depth * units + units,
        LayerSpec::BatchNorm { .. } => 4 * input_depth,
        _ => 0,
    }
}
