//! Gradient clipping and optimizers.

use crate::error::{Result, SlmError};
use crate::nn::Parameters;
use crate::real::Real;

/// Global-norm clipping: if the L2 norm over all gradients exceeds
/// `threshold`, every gradient is scaled by threshold/norm.
pub fn clip_gradients<F: Real, P: Parameters<F>>(grads: &mut P, threshold: F) -> Result<F> {
    if threshold <= F::zero() {
        return Err(SlmError::InvalidArgument("clip threshold must be positive".into()));
    }
    let norm = grads.global_norm();
    if norm > threshold {
        let scale = threshold / norm;
        for (_, t) in grads.tensors_mut() {
            t.scale(scale);
        }
    }
    Ok(norm)
}

/// p <- p - lr * g
pub fn sgd_step<F: Real, P: Parameters<F>>(params: &mut P, grads: &P, lr: F) {
    let g = grads.tensors();
    for ((_, p), (_, gt)) in params.tensors_mut().into_iter().zip(g) {
        p.add_scaled(gt, -lr);
    }
}

/// Adam hyperparameters. Defaults follow the original formulation; the
/// learning rate is supplied by the schedule.
#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig { lr, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First/second moment accumulators plus step counter.
#[derive(Debug, Clone)]
pub struct AdamState<F, P> {
    pub m: P,
    pub v: P,
    pub t: u64,
    pub config: AdamConfig,
    _marker: std::marker::PhantomData<F>,
}

impl<F: Real, P: Parameters<F>> AdamState<F, P> {
    pub fn new(params: &P, config: AdamConfig) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
            config,
            _marker: std::marker::PhantomData,
        }
    }
}

/// Bias-corrected Adam update.
pub fn adam_step<F: Real, P: Parameters<F>>(params: &mut P, grads: &P, state: &mut AdamState<F, P>) {
    state.t += 1;
    let b1 = F::from_f64(state.config.beta1);
    let b2 = F::from_f64(state.config.beta2);
    let eps = F::from_f64(state.config.epsilon);
    let lr = F::from_f64(state.config.lr);
    let one = F::one();
    let bc1 = one - F::from_f64(state.config.beta1.powi(state.t as i32));
    let bc2 = one - F::from_f64(state.config.beta2.powi(state.t as i32));

    let g = grads.tensors();
    let m = state.m.tensors_mut();
    let v = state.v.tensors_mut();
    for ((((_, p), (_, gt)), (_, mt)), (_, vt)) in
        params.tensors_mut().into_iter().zip(g).zip(m).zip(v)
    {
        for ((pe, ge), (me, ve)) in p
            .data_mut()
            .iter_mut()
            .zip(gt.data())
            .zip(mt.data_mut().iter_mut().zip(vt.data_mut().iter_mut()))
        {
            *me = b1 * *me + (one - b1) * *ge;
            *ve = b2 * *ve + (one - b2) * *ge * *ge;
            let m_hat = *me / bc1;
            let v_hat = *ve / bc2;
            *pe -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Matrix;

    #[test]
    fn clip_leaves_small_gradients_alone() {
        let mut g = Matrix::col(vec![0.05f64]);
        clip_gradients(&mut g, 0.1).unwrap();
        assert_eq!(g.data(), &[0.05]);
    }

    #[test]
    fn clip_scales_by_threshold_over_norm() {
        let mut g = Matrix::col(vec![3.0f64, 4.0]);
        clip_gradients(&mut g, 0.1).unwrap();
        assert!((g.data()[0] - 0.06).abs() < 1e-12);
        assert!((g.data()[1] - 0.08).abs() < 1e-12);
    }

    #[test]
    fn clip_bounds_global_norm_and_is_idempotent() {
        let mut g = Matrix::col(vec![1.0f64, -2.0, 3.0, 0.5]);
        clip_gradients(&mut g, 0.1).unwrap();
        assert!(g.global_norm() <= 0.1 + 1e-12);
        let once = g.clone();
        clip_gradients(&mut g, 0.1).unwrap();
        for (a, b) in g.data().iter().zip(once.data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn clip_rejects_nonpositive_threshold() {
        let mut g = Matrix::col(vec![1.0f64]);
        assert!(clip_gradients(&mut g, 0.0).is_err());
    }

    #[test]
    fn sgd_update_arithmetic_is_exact() {
        let mut p = Matrix::col(vec![1.0f64]);
        let g = Matrix::col(vec![0.1f64]);
        sgd_step(&mut p, &g, 16.0);
        assert!((p.data()[0] + 0.6).abs() < 1e-12);
    }

    #[test]
    fn sgd_zero_grad_or_lr_is_identity() {
        let mut p = Matrix::col(vec![1.0f64, -2.0]);
        let zero = p.zeros_like();
        sgd_step(&mut p, &zero, 16.0);
        assert_eq!(p.data(), &[1.0, -2.0]);
        let g = Matrix::col(vec![0.5f64, 0.5]);
        sgd_step(&mut p, &g, 0.0);
        assert_eq!(p.data(), &[1.0, -2.0]);
    }

    #[test]
    fn adam_first_step_is_approximately_minus_lr() {
        // bias correction makes m_hat=g, v_hat=g^2, update = -lr*g/(|g|+eps)
        let mut p = Matrix::col(vec![0.0f64]);
        let g = Matrix::col(vec![0.2f64]);
        let mut st = AdamState::new(&p, AdamConfig::with_lr(0.005));
        adam_step(&mut p, &g, &mut st);
        assert!((p.data()[0] + 0.005).abs() < 1e-6, "got {}", p.data()[0]);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn adam_zero_grads_keep_params_fixed() {
        let mut p = Matrix::col(vec![1.0f64, 2.0]);
        let g = p.zeros_like();
        let mut st = AdamState::new(&p, AdamConfig::with_lr(0.005));
        for _ in 0..5 {
            adam_step(&mut p, &g, &mut st);
        }
        assert_eq!(p.data(), &[1.0, 2.0]);
    }

    #[test]
    fn adam_first_step_opposes_gradient_sign() {
        let mut p = Matrix::col(vec![0.0f64, 0.0]);
        let g = Matrix::col(vec![0.3f64, -0.7]);
        let mut st = AdamState::new(&p, AdamConfig::with_lr(0.01));
        adam_step(&mut p, &g, &mut st);
        assert!(p.data()[0] < 0.0);
        assert!(p.data()[1] > 0.0);
    }
}
