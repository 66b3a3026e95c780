use alloc::vec;
use alloc::vec::Vec;

use super::{check_len, NnError};

/// RMSProp state: `m ← ρm + (1−ρ)g²; p ← p − lr·g/(√m + ε)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub accumulator: Vec<f64>,
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
}

impl OptimizerState {
    pub fn new(params: usize, learning_rate: f64, decay: f64, epsilon: f64) -> Result<Self, NnError> {
        if !(learning_rate > 0.0) {
            return Err(NnError::InvalidArgument("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&decay) {
            return Err(NnError::InvalidArgument("decay must lie in [0, 1)"));
        }
        Ok(Self {
            accumulator: vec![0.0; params],
            learning_rate,
            decay,
            epsilon,
        })
    }

    /// Applies one update. A non-finite gradient leaves both the parameters
    /// and the accumulator untouched.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), NnError> {
        check_len(self.accumulator.len(), params.len())?;
        check_len(params.len(), grads.len())?;
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(NnError::NonFinite("gradient"));
        }
        let (rho, lr, eps) = (self.decay, self.learning_rate, self.epsilon);
        for ((p, &g), m) in params.iter_mut().zip(grads).zip(self.accumulator.iter_mut()) {
            *m = rho * *m + (1.0 - rho) * g * g;
            *p -= lr * g / (libm::sqrt(*m) + eps);
        }
        Ok(())
    }
}

/// Rescales `grads` in place so their L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = libm::sqrt(grads.iter().map(|g| g * g).sum::<f64>());
    if norm > max_norm && norm.is_finite() {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_magnitude() {
        let mut opt = OptimizerState::new(1, 8e-3, 0.99, 1e-5).unwrap();
        let mut p = [0.0];
        opt.update(&mut p, &[1.0]).unwrap();
        let expected = 8e-3 / (libm::sqrt(0.01) + 1e-5);
        assert!((p[0] + expected).abs() < 1e-15);
        assert!((expected - 0.0799920008).abs() < 1e-9);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut opt = OptimizerState::new(2, 8e-3, 0.99, 1e-5).unwrap();
        let mut p = [1.5, -0.5];
        opt.update(&mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, [1.5, -0.5]);
    }

    #[test]
    fn non_finite_gradient_is_rejected_without_side_effects() {
        let mut opt = OptimizerState::new(2, 8e-3, 0.99, 1e-5).unwrap();
        let mut p = [1.0, 2.0];
        assert!(opt.update(&mut p, &[0.5, f64::NAN]).is_err());
        assert_eq!(p, [1.0, 2.0]);
        assert_eq!(opt.accumulator, vec![0.0, 0.0]);
    }

    #[test]
    fn descends_on_quadratic() {
        let mut opt = OptimizerState::new(1, 8e-3, 0.99, 1e-5).unwrap();
        let mut p = [1.0];
        let mut last = 1.0;
        for _ in 0..10 {
            let g = 2.0 * p[0];
            opt.update(&mut p, &[g]).unwrap();
            assert!(p[0].abs() < last);
            last = p[0].abs();
        }
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(OptimizerState::new(1, 0.0, 0.99, 1e-5).is_err());
        assert!(OptimizerState::new(1, 1e-3, 1.0, 1e-5).is_err());
    }

    #[test]
    fn clipping_bounds_norm() {
        let mut g = [3.0, 4.0];
        assert_eq!(clip_grad_norm(&mut g, 1.0), 5.0);
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
    }
}
