use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::ParamSet;
use crate::error::{Error, Result};

/// Moment buffers for the bias-corrected adaptive-moment update.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    /// Fresh state for `params` with β1 = 0.9, β2 = 0.999, eps = 1e-8.
    pub fn new<P: ParamSet + ?Sized>(params: &P) -> Self {
        Self::with_hyperparameters(params, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyperparameters<P: ParamSet + ?Sized>(
        params: &P,
        beta1: f64,
        beta2: f64,
        eps: f64,
    ) -> Self {
        let shapes: Vec<usize> = params.slices().iter().map(|s| s.len()).collect();
        AdamState {
            first: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
            beta1,
            beta2,
            eps,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> &[Vec<f64>] {
        &self.first
    }

    pub fn second_moments(&self) -> &[Vec<f64>] {
        &self.second
    }
}

/// One in-place update of `params` from `grads`; increments `state.step`.
pub fn adam_step<P, G>(params: &mut P, grads: &G, state: &mut AdamState, lr: f64) -> Result<()>
where
    P: ParamSet + ?Sized,
    G: ParamSet + ?Sized,
{
    let grads = grads.slices();
    let params = params.slices_mut();
    if grads.len() != params.len() || state.first.len() != params.len() {
        return Err(Error::dim("optimizer buffer count", params.len(), grads.len()));
    }
    for (k, (p, g)) in params.iter().zip(&grads).enumerate() {
        if p.len() != g.len() || state.first[k].len() != p.len() {
            return Err(Error::dim(format!("optimizer buffer {k}"), p.len(), g.len()));
        }
    }

    state.step += 1;
    let t = state.step as f64;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let bc1 = 1.0 - libm::pow(b1, t);
    let bc2 = 1.0 - libm::pow(b2, t);
    for (k, (p, g)) in params.into_iter().zip(grads).enumerate() {
        let m = &mut state.first[k];
        let v = &mut state.second[k];
        for i in 0..p.len() {
            let gi = g[i];
            m[i] = flush(b1 * m[i] + (1.0 - b1) * gi);
            v[i] = flush(b2 * v[i] + (1.0 - b2) * gi * gi);
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= lr * m_hat / (libm::sqrt(v_hat) + eps);
        }
    }
    Ok(())
}

/// Moments of parameters that stop receiving gradient decay geometrically
/// into the subnormal range, where arithmetic is many times slower. Their
/// contribution to the update is below 1e-300 by then, so drop them.
#[inline]
fn flush(x: f64) -> f64 {
    if x.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        x
    }
}
