use crate::autodiff::params::ParamStore;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Moment estimates for Adam with bias correction.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
    step: u64,
}

impl<T: Scalar> AdamState<T> {
    /// Zeroed moments shaped after `params`, with the usual 0.9 / 0.999 / 1e-8 constants.
    pub fn new(params: &ParamStore<T>) -> Self {
        let zeros = || {
            params
                .iter()
                .map(|(_, t)| vec![T::zero(); t.len()])
                .collect::<Vec<_>>()
        };
        Self {
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            eps: T::of(1e-8),
            first: zeros(),
            second: zeros(),
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, index: usize) -> &[T] {
        &self.first[index]
    }

    pub fn second_moment(&self, index: usize) -> &[T] {
        &self.second[index]
    }
}

/// One Adam update using each tensor's accumulated gradient. Tensors without
/// a gradient are treated as having a zero gradient.
pub fn adam_step<T: Scalar>(params: &mut ParamStore<T>, state: &mut AdamState<T>, lr: T) -> Result<()> {
    if !(lr > T::zero()) {
        return Err(Error::Config(format!("learning rate must be > 0, got {lr}")));
    }
    if state.first.len() != params.len() {
        return Err(Error::Config(format!(
            "Adam state tracks {} tensors, parameter store has {}",
            state.first.len(),
            params.len()
        )));
    }
    state.step += 1;
    let t = i32::try_from(state.step).unwrap_or(i32::MAX);
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);
    for (i, tensor) in params.tensors_mut().enumerate() {
        let Some(grad) = tensor.grad().map(<[T]>::to_vec) else {
            continue;
        };
        let (m, v) = (&mut state.first[i], &mut state.second[i]);
        for (j, (p, g)) in tensor.values_mut().iter_mut().zip(grad).enumerate() {
            m[j] = b1 * m[j] + (T::one() - b1) * g;
            v[j] = b2 * v[j] + (T::one() - b2) * g * g;
            let m_hat = m[j] / c1;
            let v_hat = v[j] / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
