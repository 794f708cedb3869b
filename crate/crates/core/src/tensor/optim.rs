//! Gradient clipping and the ADAM optimizer.

use super::{ParamSet, Scalar, TensorError};

/// L2 norm over the concatenation of all gradient buffers.
pub fn global_norm<S: Scalar>(grads: &[Vec<S>]) -> S {
    let mut acc = S::zero();
    for g in grads {
        for &v in g {
            acc = acc + v * v;
        }
    }
    acc.sqrt()
}

/// Scales all gradients by `max_norm / norm` when the global L2 norm exceeds
/// `max_norm`; otherwise leaves them untouched. Returns the pre-clip norm.
pub fn clip_global_norm<S: Scalar>(grads: &mut [Vec<S>], max_norm: S) -> S {
    let norm = global_norm(grads);
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            for v in g.iter_mut() {
                *v = *v * scale;
            }
        }
    }
    norm
}

/// ADAM hyperparameters. Defaults: lr 1e-4, beta1 0.9, beta2 0.999, eps 1e-8.
#[derive(Debug, Clone, Copy)]
pub struct AdamConfig<S> {
    pub lr: S,
    pub beta1: S,
    pub beta2: S,
    pub eps: S,
}

impl<S: Scalar> AdamConfig<S> {
    pub fn with_lr(lr: S) -> Self {
        Self {
            lr,
            beta1: S::from_real(0.9),
            beta2: S::from_real(0.999),
            eps: S::from_real(1e-8),
        }
    }
}

impl<S: Scalar> Default for AdamConfig<S> {
    fn default() -> Self {
        Self::with_lr(S::from_real(1e-4))
    }
}

/// Per-parameter first and second moment accumulators plus the step count.
#[derive(Debug, Clone)]
pub struct AdamState<S> {
    pub cfg: AdamConfig<S>,
    step: u64,
    m: Vec<Vec<S>>,
    v: Vec<Vec<S>>,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(cfg: AdamConfig<S>, params: &ParamSet<S>) -> Self {
        let m = params.iter().map(|(_, a)| vec![S::zero(); a.numel()]).collect();
        let v = params.iter().map(|(_, a)| vec![S::zero(); a.numel()]).collect();
        Self {
            cfg,
            step: 0,
            m,
            v,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One ADAM update with bias correction. A non-finite gradient aborts before
/// any parameter is touched, reporting the offending parameter name.
pub fn adam_step<S: Scalar>(
    params: &mut ParamSet<S>,
    grads: &[Vec<S>],
    state: &mut AdamState<S>,
) -> Result<(), TensorError> {
    assert_eq!(grads.len(), params.len(), "one gradient buffer per parameter");
    for (idx, g) in grads.iter().enumerate() {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(TensorError::NonFiniteGradient {
                param: params.name(idx).to_string(),
            });
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let cfg = state.cfg;
    let bias1 = S::one() - cfg.beta1.powi(t);
    let bias2 = S::one() - cfg.beta2.powi(t);
    for idx in 0..params.len() {
        let m = &mut state.m[idx];
        let v = &mut state.v[idx];
        let g = &grads[idx];
        let p = params.array_mut(idx).data_mut();
        for i in 0..p.len() {
            m[i] = cfg.beta1 * m[i] + (S::one() - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (S::one() - cfg.beta2) * g[i] * g[i];
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            p[i] = p[i] - cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Array;

    #[test]
    fn small_norm_is_untouched() {
        let mut grads = vec![vec![3.0f64, 4.0]]; // norm 5
        let norm = clip_global_norm(&mut grads, 10.0);
        assert!((norm - 5.0).abs() < 1e-12);
        assert_eq!(grads[0], vec![3.0, 4.0]);
    }

    #[test]
    fn large_norm_is_scaled_to_cap() {
        let mut grads = vec![vec![12.0f64], vec![16.0]]; // norm 20
        let norm = clip_global_norm(&mut grads, 10.0);
        assert!((norm - 20.0).abs() < 1e-12);
        assert_eq!(grads[0][0], 6.0);
        assert_eq!(grads[1][0], 8.0);
        assert!((global_norm(&grads) - 10.0).abs() < 1e-6);
        // Direction preserved.
        assert!(grads[0][0] / grads[1][0] - 12.0 / 16.0 < 1e-12);
    }

    #[test]
    fn zero_gradients_stay_zero() {
        let mut grads = vec![vec![0.0f64; 8]];
        let norm = clip_global_norm(&mut grads, 10.0);
        assert_eq!(norm, 0.0);
        assert!(grads[0].iter().all(|&v| v == 0.0));
    }

    fn one_param(values: Vec<f64>) -> ParamSet<f64> {
        let mut p = ParamSet::new();
        p.push("w", Array::from_vec(&[values.len()], values).unwrap());
        p
    }

    #[test]
    fn zero_gradient_leaves_params_and_bumps_step() {
        let mut params = one_param(vec![1.0, -2.0, 3.0]);
        let mut state = AdamState::new(AdamConfig::default(), &params);
        adam_step(&mut params, &[vec![0.0; 3]], &mut state).unwrap();
        assert_eq!(state.step_count(), 1);
        assert_eq!(params.array(0).data(), &[1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_moves_by_about_lr() {
        // With bias correction, the first update for a constant gradient g is
        // lr * g / (|g| + eps) = lr * sign(g).
        let lr = 1e-3;
        let mut params = one_param(vec![0.5, 0.5]);
        let mut state = AdamState::new(AdamConfig::with_lr(lr), &params);
        adam_step(&mut params, &[vec![0.2, -0.7]], &mut state).unwrap();
        assert!((params.array(0).data()[0] - (0.5 - lr)).abs() < 1e-9);
        assert!((params.array(0).data()[1] - (0.5 + lr)).abs() < 1e-9);
    }

    #[test]
    fn non_finite_gradient_aborts_naming_param() {
        let mut params = ParamSet::new();
        params.push("enc.w", Array::from_vec(&[1], vec![1.0f64]).unwrap());
        params.push("dec.w", Array::from_vec(&[1], vec![1.0f64]).unwrap());
        let mut state = AdamState::new(AdamConfig::default(), &params);
        let err = adam_step(
            &mut params,
            &[vec![0.0], vec![f64::NAN]],
            &mut state,
        )
        .unwrap_err();
        assert!(err.to_string().contains("dec.w"));
        assert_eq!(state.step_count(), 0);
        assert_eq!(params.array(0).data(), &[1.0]);
    }

    #[test]
    fn quadratic_bowl_converges() {
        // The optimizer serves as its own oracle on f(w) = |w|^2.
        let mut params = one_param(vec![2.0, -1.5, 0.8, -0.3]);
        let mut state = AdamState::new(AdamConfig::with_lr(1e-2), &params);
        for _ in 0..5000 {
            let grads: Vec<Vec<f64>> =
                vec![params.array(0).data().iter().map(|&w| 2.0 * w).collect()];
            adam_step(&mut params, &grads, &mut state).unwrap();
        }
        let norm: f64 = params.array(0).data().iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!(norm < 1e-3, "norm {norm}");
    }
}
