//! Adam with bias correction.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            config,
        }
    }
}

/// One Adam update of `param` in place.
///
/// The gradient is validated before any state changes, so a rejected step
/// leaves both the parameter and the state untouched.
pub fn adam_step(param: &mut [f64], grad: &[f64], state: &mut AdamState) -> Result<()> {
    if param.len() != grad.len() {
        return Err(Error::shape("adam grad", param.len(), grad.len()));
    }
    if state.m.len() != param.len() || state.v.len() != param.len() {
        return Err(Error::shape("adam state", param.len(), state.m.len()));
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("adam gradient"));
    }
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    state.t += 1;
    let t = state.t as f64;
    let correction1 = 1.0 - libm::pow(beta1, t);
    let correction2 = 1.0 - libm::pow(beta2, t);
    for i in 0..param.len() {
        let g = grad[i];
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        let m_hat = state.m[i] / correction1;
        let v_hat = state.v[i] / correction2;
        param[i] -= lr * m_hat / (libm::sqrt(v_hat) + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_grad_on_fresh_state_is_identity() {
        let mut p = vec![1.5, -2.0, 0.0];
        let mut s = AdamState::new(3, AdamConfig::default());
        adam_step(&mut p, &[0.0; 3], &mut s).unwrap();
        assert_eq!(p, vec![1.5, -2.0, 0.0]);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let config = AdamConfig {
            eps: 0.0,
            ..AdamConfig::default()
        };
        for g in [3.7, -0.002, 1e6] {
            let mut p = vec![0.0];
            let mut s = AdamState::new(1, config);
            adam_step(&mut p, &[g], &mut s).unwrap();
            assert!((p[0] + config.lr * g.signum()).abs() < 1e-15, "g={g} p={}", p[0]);
        }
    }

    #[test]
    fn two_steps_match_unrolled_recurrence() {
        let c = AdamConfig::default();
        let g = 0.3;
        let mut p = vec![1.0];
        let mut s = AdamState::new(1, c);
        adam_step(&mut p, &[g], &mut s).unwrap();
        adam_step(&mut p, &[g], &mut s).unwrap();

        let m1 = (1.0 - c.beta1) * g;
        let v1 = (1.0 - c.beta2) * g * g;
        let p1 = 1.0 - c.lr * (m1 / (1.0 - c.beta1)) / (libm::sqrt(v1 / (1.0 - c.beta2)) + c.eps);
        let m2 = c.beta1 * m1 + (1.0 - c.beta1) * g;
        let v2 = c.beta2 * v1 + (1.0 - c.beta2) * g * g;
        let m2_hat = m2 / (1.0 - c.beta1 * c.beta1);
        let v2_hat = v2 / (1.0 - c.beta2 * c.beta2);
        let p2 = p1 - c.lr * m2_hat / (libm::sqrt(v2_hat) + c.eps);
        assert!((p[0] - p2).abs() < 1e-12);
        assert_eq!(s.t, 2);
    }

    #[test]
    fn rejects_non_finite_grad_without_mutation() {
        let mut p = vec![1.0, 2.0];
        let mut s = AdamState::new(2, AdamConfig::default());
        assert_eq!(
            adam_step(&mut p, &[0.1, f64::NAN], &mut s),
            Err(Error::NonFinite("adam gradient"))
        );
        assert_eq!(p, vec![1.0, 2.0]);
        assert_eq!(s.t, 0);
        assert!(adam_step(&mut p, &[0.1], &mut s).is_err());
    }

    #[test]
    fn zero_lr_leaves_params() {
        let mut p = vec![0.25; 4];
        let mut s = AdamState::new(4, AdamConfig { lr: 0.0, ..AdamConfig::default() });
        for _ in 0..5 {
            adam_step(&mut p, &[1.0, -1.0, 3.0, 0.5], &mut s).unwrap();
        }
        assert_eq!(p, vec![0.25; 4]);
    }
}
