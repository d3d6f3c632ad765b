//! Adam optimizer with bias correction.

use super::Tensor;
use crate::error::{Error, Result};

/// Per-parameter Adam accumulators.
#[derive(Clone, Debug)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One Adam update from the gradient currently stored on `param`;
/// zeroes the gradient afterwards.
pub fn adam_step(param: &Tensor, state: &mut AdamState, lr: f64) -> Result<()> {
    if state.m.len() != param.len() {
        return Err(Error::ShapeMismatch {
            op: "adam_step",
            lhs: param.shape().to_vec(),
            rhs: vec![state.m.len()],
        });
    }
    {
        let grad = param.grad();
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::DivergedTraining {
                name: param.name().to_string(),
                what: "gradient",
            });
        }
        state.t += 1;
        let bc1 = 1.0 - state.beta1.powi(state.t as i32);
        let bc2 = 1.0 - state.beta2.powi(state.t as i32);
        let mut values = param.0.values.borrow_mut();
        for i in 0..values.len() {
            let g = grad[i];
            state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
            state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
            let m_hat = state.m[i] / bc1;
            let v_hat = state.v[i] / bc2;
            values[i] -= lr * m_hat / (v_hat.sqrt() + state.eps);
        }
    }
    param.zero_grad();
    Ok(())
}

/// Adam over a parameter list, in a fixed order.
pub struct Adam {
    entries: Vec<(Tensor, AdamState)>,
    pub lr: f64,
}

impl Adam {
    pub fn new(params: &[Tensor], lr: f64) -> Self {
        let entries = params
            .iter()
            .map(|p| (p.clone(), AdamState::new(p.len())))
            .collect();
        Adam { entries, lr }
    }

    pub fn step(&mut self) -> Result<()> {
        for (param, state) in &mut self.entries {
            adam_step(param, state, self.lr)?;
        }
        Ok(())
    }

    pub fn zero_grads(&self) {
        for (param, _) in &self.entries {
            param.zero_grad();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        // Bias-corrected m_hat = g, v_hat = g^2, so the step is
        // -lr * g / (|g| + eps) = -lr for g = 1.
        let p = Tensor::param(vec![1], vec![0.5], "p");
        p.0.grad.borrow_mut()[0] = 1.0;
        let mut st = AdamState::new(1);
        adam_step(&p, &mut st, 0.01).unwrap();
        let moved = 0.5 - p.item();
        assert!((moved - 0.01).abs() < 1e-9, "step was {moved}");
        assert_eq!(p.grad_vec(), vec![0.0]);
        assert_eq!(st.step_count(), 1);
    }

    #[test]
    fn zero_grad_leaves_param_unchanged() {
        let p = Tensor::param(vec![3], vec![1.0, -2.0, 3.0], "p");
        let mut st = AdamState::new(3);
        adam_step(&p, &mut st, 0.1).unwrap();
        assert_eq!(p.to_vec(), vec![1.0, -2.0, 3.0]);
        assert_eq!(st.step_count(), 1);
    }

    #[test]
    fn constant_gradient_moves_monotonically() {
        let p = Tensor::param(vec![1], vec![0.0], "p");
        let mut st = AdamState::new(1);
        let mut prev = p.item();
        for _ in 0..2 {
            p.0.grad.borrow_mut()[0] = 2.5;
            adam_step(&p, &mut st, 0.05).unwrap();
            let cur = p.item();
            assert!(cur < prev, "param must move against the gradient sign");
            prev = cur;
        }
    }

    #[test]
    fn non_finite_gradient_reports_param_name() {
        let p = Tensor::param(vec![1], vec![0.0], "actor.l1.w");
        p.0.grad.borrow_mut()[0] = f64::NAN;
        let mut st = AdamState::new(1);
        let err = adam_step(&p, &mut st, 0.01).unwrap_err();
        assert!(err.to_string().contains("actor.l1.w"), "{err}");
    }
}
