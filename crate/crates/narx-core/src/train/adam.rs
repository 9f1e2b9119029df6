//! Adam with bias correction and global-norm gradient clipping.

use super::TrainError;
use crate::model::Params;

/// Per-parameter first/second moment buffers plus the step counter.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    pub step: u64,
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
}

impl OptimizerState {
    pub fn new(params: &Params, lr: f32) -> Self {
        OptimizerState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: params.entries().iter().map(|e| vec![0.0; e.numel()]).collect(),
            v: params.entries().iter().map(|e| vec![0.0; e.numel()]).collect(),
        }
    }
}

/// Scale gradients in place so their joint L2 norm is at most `max_norm`.
/// Returns the pre-clip norm.
pub fn clip_global_norm(grads: &mut [Option<Vec<f32>>], max_norm: f32) -> f32 {
    let mut sq = 0.0f64;
    for g in grads.iter().flatten() {
        for &v in g {
            sq += (v as f64) * (v as f64);
        }
    }
    let norm = sq.sqrt() as f32;
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for g in grads.iter_mut().flatten() {
            for v in g.iter_mut() {
                *v *= scale;
            }
        }
    }
    norm
}

/// One Adam update over the trainable entries. `grads` is parallel to
/// `params.entries()`; `None` (frozen or unused parameters) is skipped.
/// Clipping at `clip_norm` is applied first.
pub fn adam_step(
    params: &mut Params,
    grads: &mut [Option<Vec<f32>>],
    opt: &mut OptimizerState,
    clip_norm: f32,
) -> Result<(), TrainError> {
    debug_assert_eq!(grads.len(), params.len());
    opt.step += 1;
    for (i, e) in params.entries().iter().enumerate() {
        if let Some(g) = &grads[i] {
            if g.iter().any(|v| !v.is_finite()) {
                return Err(TrainError::NonFiniteGradient {
                    name: e.name.clone(),
                    step: opt.step,
                });
            }
        }
    }
    clip_global_norm(grads, clip_norm);
    let bc1 = 1.0 - opt.beta1.powi(opt.step as i32);
    let bc2 = 1.0 - opt.beta2.powi(opt.step as i32);
    for (i, e) in params.entries_mut().iter_mut().enumerate() {
        let Some(g) = &grads[i] else {
            // moments still decay on skipped parameters
            for mv in opt.m[i].iter_mut() {
                *mv *= opt.beta1;
            }
            for vv in opt.v[i].iter_mut() {
                *vv *= opt.beta2;
            }
            continue;
        };
        if !e.trainable {
            return Err(TrainError::FrozenGradient(e.name.clone()));
        }
        let (m, v) = (&mut opt.m[i], &mut opt.v[i]);
        for j in 0..g.len() {
            m[j] = opt.beta1 * m[j] + (1.0 - opt.beta1) * g[j];
            v[j] = opt.beta2 * v[j] + (1.0 - opt.beta2) * g[j] * g[j];
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            e.data[j] -= opt.lr * m_hat / (v_hat.sqrt() + opt.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_param(value: f32) -> Params {
        let mut p = Params::new();
        p.insert("theta", vec![1], vec![value]);
        p
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = one_param(0.0);
        let mut opt = OptimizerState::new(&p, 1e-3);
        let mut grads = vec![Some(vec![1.0f32])];
        adam_step(&mut p, &mut grads, &mut opt, 1.0).unwrap();
        let theta = p.get("theta").unwrap().data[0];
        assert!((theta + 1e-3).abs() < 1e-8, "theta = {theta}");
    }

    #[test]
    fn zero_grad_leaves_param_unchanged_and_decays_moments() {
        // fresh state: zero grad moves nothing at all
        let mut p = one_param(0.5);
        let mut opt = OptimizerState::new(&p, 1e-3);
        let mut zero = vec![Some(vec![0.0f32])];
        adam_step(&mut p, &mut zero, &mut opt, 1.0).unwrap();
        assert_eq!(p.get("theta").unwrap().data[0], 0.5);
        // once momentum exists, further zero grads decay it geometrically
        let mut grads = vec![Some(vec![1.0f32])];
        adam_step(&mut p, &mut grads, &mut opt, 1.0).unwrap();
        let m_before = opt.m[0][0];
        let mut zero = vec![Some(vec![0.0f32])];
        adam_step(&mut p, &mut zero, &mut opt, 1.0).unwrap();
        assert!(opt.m[0][0].abs() < m_before.abs());
    }

    #[test]
    fn truly_absent_grad_is_a_no_op_on_the_param() {
        let mut p = one_param(0.5);
        let mut opt = OptimizerState::new(&p, 1e-2);
        let mut grads: Vec<Option<Vec<f32>>> = vec![None];
        adam_step(&mut p, &mut grads, &mut opt, 1.0).unwrap();
        assert_eq!(p.get("theta").unwrap().data[0], 0.5);
    }

    #[test]
    fn quadratic_converges() {
        // f(theta) = theta^2, grad = 2 theta, 100 steps from 1.0
        let mut p = one_param(1.0);
        let mut opt = OptimizerState::new(&p, 1e-2);
        for _ in 0..100 {
            let theta = p.get("theta").unwrap().data[0];
            let mut grads = vec![Some(vec![2.0 * theta])];
            adam_step(&mut p, &mut grads, &mut opt, 10.0).unwrap();
        }
        assert!(p.get("theta").unwrap().data[0].abs() < 0.5);
    }

    #[test]
    fn nan_gradient_is_an_error_with_step_index() {
        let mut p = one_param(0.0);
        let mut opt = OptimizerState::new(&p, 1e-3);
        let mut grads = vec![Some(vec![f32::NAN])];
        match adam_step(&mut p, &mut grads, &mut opt, 1.0) {
            Err(TrainError::NonFiniteGradient { step, .. }) => assert_eq!(step, 1),
            other => panic!("expected NonFiniteGradient, got {other:?}"),
        }
    }

    #[test]
    fn frozen_param_with_gradient_is_a_contract_violation() {
        let mut p = one_param(0.0);
        p.set_trainable(|_| false);
        let mut opt = OptimizerState::new(&p, 1e-3);
        let mut grads = vec![Some(vec![1.0f32])];
        assert!(matches!(
            adam_step(&mut p, &mut grads, &mut opt, 1.0),
            Err(TrainError::FrozenGradient(_))
        ));
    }

    #[test]
    fn clip_bounds_global_norm() {
        let mut grads = vec![Some(vec![3.0f32, 4.0]), None, Some(vec![12.0f32])];
        let pre = clip_global_norm(&mut grads, 1.0);
        assert!((pre - 13.0).abs() < 1e-5);
        let mut sq = 0.0f32;
        for g in grads.iter().flatten() {
            for &v in g {
                sq += v * v;
            }
        }
        assert!(sq.sqrt() <= 1.0 + 1e-6);
    }

    proptest::proptest! {
        #[test]
        fn clip_never_exceeds_limit(values in proptest::collection::vec(-100.0f32..100.0, 1..40)) {
            let mut grads = vec![Some(values)];
            clip_global_norm(&mut grads, 1.0);
            let mut sq = 0.0f64;
            for g in grads.iter().flatten() {
                for &v in g {
                    sq += (v as f64) * (v as f64);
                }
            }
            proptest::prop_assert!(sq.sqrt() <= 1.0 + 1e-6);
        }
    }
}
