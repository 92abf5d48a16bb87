//! Adam with bias correction.

use std::collections::BTreeMap;

use super::tensor::Tensor;
use super::{NnError, Scalar};

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment estimates per parameter, plus the step count.
#[derive(Debug, Clone, Default)]
pub struct AdamState<T> {
    step: u64,
    first: BTreeMap<String, Tensor<T>>,
    second: BTreeMap<String, Tensor<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new() -> Self {
        Self {
            step: 0,
            first: BTreeMap::new(),
            second: BTreeMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update over name-aligned parameters and gradients.
///
/// Every gradient must match a parameter by name and dims; parameters
/// without gradients are left untouched. With all-zero gradients the
/// moments stay zero and parameters do not move; with `lr == 0` the state
/// still advances.
pub fn optimizer_step<T: Scalar>(
    params: &mut [(String, &mut Tensor<T>)],
    grads: &[(String, Tensor<T>)],
    state: &mut AdamState<T>,
    hyper: &AdamParams,
) -> Result<(), NnError> {
    for (name, _) in grads {
        if !params.iter().any(|(p, _)| p == name) {
            return Err(NnError::NameMismatch(format!(
                "gradient {name} has no matching parameter"
            )));
        }
    }

    state.step += 1;
    let bc1 = 1.0 - hyper.beta1.powi(state.step as i32);
    let bc2 = 1.0 - hyper.beta2.powi(state.step as i32);
    let beta1 = T::from_f64(hyper.beta1);
    let beta2 = T::from_f64(hyper.beta2);
    let one_m_beta1 = T::from_f64(1.0 - hyper.beta1);
    let one_m_beta2 = T::from_f64(1.0 - hyper.beta2);
    let lr = T::from_f64(hyper.lr);
    let eps = T::from_f64(hyper.epsilon);
    let inv_bc1 = T::from_f64(1.0 / bc1);
    let inv_bc2 = T::from_f64(1.0 / bc2);

    for (name, param) in params.iter_mut() {
        let Some((_, grad)) = grads.iter().find(|(g, _)| g == name) else {
            continue;
        };
        if grad.dims() != param.dims() {
            return Err(NnError::ShapeMismatch(format!(
                "gradient {name} has dims {:?}, parameter has {:?}",
                grad.dims(),
                param.dims()
            )));
        }
        let m = state
            .first
            .entry(name.clone())
            .or_insert_with(|| Tensor::zeros(param.dims()));
        let v = state
            .second
            .entry(name.clone())
            .or_insert_with(|| Tensor::zeros(param.dims()));
        for ((p, &g), (m, v)) in param
            .data_mut()
            .iter_mut()
            .zip(grad.data())
            .zip(m.data_mut().iter_mut().zip(v.data_mut()))
        {
            *m = beta1 * *m + one_m_beta1 * g;
            *v = beta2 * *v + one_m_beta2 * g * g;
            let m_hat = *m * inv_bc1;
            let v_hat = *v * inv_bc2;
            *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
