use super::model::{Gradients, ModelState};
use super::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
        }
    }
}

/// Adam with bias-corrected moments:
/// `theta -= lr * m_hat / (sqrt(v_hat) + eps)`.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(config: AdamConfig, state: &ModelState<T>) -> Self {
        let zeros: Vec<Vec<T>> = state.trainable().iter().map(|(_, t)| vec![T::zero(); t.len()]).collect();
        Self {
            config,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn apply(&mut self, state: &mut ModelState<T>, grads: &Gradients<T>) {
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 / (1.0 - beta1.powi(t));
        let c2 = 1.0 / (1.0 - beta2.powi(t));
        let (b1, b2) = (T::of(beta1), T::of(beta2));
        let (nb1, nb2) = (T::of(1.0 - beta1), T::of(1.0 - beta2));
        let (c1, c2, lr, eps) = (T::of(c1), T::of(c2), T::of(learning_rate), T::of(epsilon));
        for (((param, grad), m), v) in state
            .trainable_mut()
            .into_iter()
            .zip(&grads.0)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            for i in 0..param.len() {
                let g = grad[i];
                m[i] = b1 * m[i] + nb1 * g;
                v[i] = b2 * v[i] + nb2 * g * g;
                let m_hat = m[i] * c1;
                let v_hat = v[i] * c2;
                param[i] = param[i] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{build_model, ModelConfig};

    fn setup() -> (ModelState<f64>, Adam<f64>) {
        let state = build_model::<f64>(ModelConfig::grad_check_small(), 1).unwrap();
        let adam = Adam::new(AdamConfig::default(), &state);
        (state, adam)
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let (mut state, mut adam) = setup();
        let before = state.clone();
        let zeros = Gradients(state.trainable().iter().map(|(_, t)| vec![0.0; t.len()]).collect());
        adam.apply(&mut state, &zeros);
        assert_eq!(state, before);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let (mut state, mut adam) = setup();
        let before = state.clone();
        let mut grads: Vec<Vec<f64>> = state.trainable().iter().map(|(_, t)| vec![0.0; t.len()]).collect();
        grads[3][0] = 0.37;
        grads[3][1] = -2.5;
        adam.apply(&mut state, &Gradients(grads));
        let lr = 1e-3;
        let eps = 1e-7;
        let d0 = state.conv.bias[0] - before.conv.bias[0];
        let d1 = state.conv.bias[1] - before.conv.bias[1];
        assert!((d0 - (-lr * 0.37 / (0.37 + eps))).abs() < 1e-15);
        assert!((d1 - (lr * 2.5 / (2.5 + eps))).abs() < 1e-15);
        assert!((d0 + lr).abs() < 1e-9);
        assert_eq!(adam.steps(), 1);
    }
}
