//! Adam, the step-decay schedule and the MSE loss.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;
use crate::params::Parameters;
use crate::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::shape("mse_loss", target.len(), pred.len()));
    }
    if pred.is_empty() {
        return Err(Error::invalid("mse_loss of empty arrays"));
    }
    let s: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(s / pred.len() as f64)
}

/// Adds the gradient of `sum (p - t)^2 / denom` to `grad` and returns the
/// un-normalised squared error.
pub fn squared_error_grad(pred: &[f64], target: &[f64], denom: f64, grad: &mut [f64]) -> f64 {
    let mut sse = 0.0;
    for ((g, p), t) in grad.iter_mut().zip(pred).zip(target) {
        let d = p - t;
        sse += d * d;
        *g = 2.0 * d / denom;
    }
    sse
}

/// One bias-corrected Adam update on flat slices; `step` is the 1-based
/// count after this update.
#[allow(clippy::too_many_arguments)]
pub fn adam_step(
    weights: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    step: u64,
    lr: f64,
    betas: (f64, f64),
    eps: f64,
) {
    let (b1, b2) = betas;
    let c1 = 1.0 - libm::pow(b1, step as f64);
    let c2 = 1.0 - libm::pow(b2, step as f64);
    for i in 0..weights.len() {
        let g = grads[i];
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        let mh = m[i] / c1;
        let vh = v[i] / c2;
        weights[i] -= lr * mh / (sqrt(vh) + eps);
    }
}

/// Learning rate after finishing `epoch` (0-based): decays by `factor`
/// whenever `epoch` is a positive multiple of `step_size`. A zero step
/// size keeps the rate constant.
pub fn lr_schedule_step(lr: f64, epoch: usize, step_size: usize, factor: f64) -> f64 {
    if step_size > 0 && epoch > 0 && epoch.is_multiple_of(step_size) {
        lr * factor
    } else {
        lr
    }
}

/// Adam state over every tensor of a `Parameters` model, in tensor order.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(parameters: usize) -> Self {
        Self {
            step: 0,
            m: vec![0.0; parameters],
            v: vec![0.0; parameters],
        }
    }

    pub fn update<P: Parameters>(&mut self, params: &mut P, grads: &P, lr: f64) {
        self.step += 1;
        let grads = grads.tensors();
        let mut off = 0;
        for (w, (_, g)) in params.tensors_mut().into_iter().zip(grads) {
            let n = w.len();
            adam_step(
                &mut w.data,
                &g.data,
                &mut self.m[off..off + n],
                &mut self.v[off..off + n],
                self.step,
                lr,
                (BETA1, BETA2),
                EPSILON,
            );
            off += n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse_loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse_loss(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!(mse_loss(&[0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn zero_gradient_leaves_weights() {
        let mut w = [1.5, -2.0];
        let (mut m, mut v) = ([0.0; 2], [0.0; 2]);
        adam_step(&mut w, &[0.0, 0.0], &mut m, &mut v, 1, 0.1, (BETA1, BETA2), EPSILON);
        assert_eq!(w, [1.5, -2.0]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // f(w) = w^2 / 2, gradient w = 1
        let mut w = [1.0];
        let (mut m, mut v) = ([0.0], [0.0]);
        adam_step(&mut w, &[1.0], &mut m, &mut v, 1, 0.1, (BETA1, BETA2), EPSILON);
        assert!((w[0] - 0.9).abs() < 1e-7);
    }

    #[test]
    fn schedule() {
        assert_eq!(lr_schedule_step(1e-3, 99, 100, 0.5), 1e-3);
        assert_eq!(lr_schedule_step(1e-3, 100, 100, 0.5), 5e-4);
        assert_eq!(lr_schedule_step(1e-3, 100, 100, 1.0), 1e-3);
        assert_eq!(lr_schedule_step(1e-3, 100, 0, 0.5), 1e-3);
    }
}
