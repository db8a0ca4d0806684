use crate::{NdError, Result, Tensor};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Decoupled: applied directly to the weights, not folded into the gradient.
    pub weight_decay: f64,
}

impl AdamConfig {
    pub fn new(learning_rate: f64, weight_decay: f64) -> Self {
        Self {
            learning_rate,
            weight_decay,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// Moment buffers for one parameter group.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update of every tensor in `params` from its stored gradient.
    /// A tensor without a gradient is treated as having a zero gradient.
    pub fn step(&mut self, params: &mut [&mut Tensor]) -> Result<()> {
        if self.first.is_empty() {
            self.first = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.second = self.first.clone();
        }
        if self.first.len() != params.len() {
            return Err(NdError::Contract(format!(
                "optimizer tracks {} tensors, step received {}",
                self.first.len(),
                params.len()
            )));
        }
        for (i, p) in params.iter().enumerate() {
            if p.len() != self.first[i].len() || p.grad().is_some_and(|g| g.len() != p.len()) {
                return Err(NdError::Dimension {
                    op: "adam_step",
                    lhs: vec![self.first[i].len()],
                    rhs: p.shape().to_vec(),
                });
            }
        }

        self.step += 1;
        let AdamConfig {
            learning_rate: lr,
            beta1,
            beta2,
            epsilon,
            weight_decay,
        } = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        let decay = 1.0 - lr * weight_decay;

        for (i, p) in params.iter_mut().enumerate() {
            let grad = p.grad().map(<[f64]>::to_vec);
            let (m, v) = (&mut self.first[i], &mut self.second[i]);
            for (j, w) in p.values_mut().iter_mut().enumerate() {
                let g = grad.as_ref().map_or(0.0, |g| g[j]);
                m[j] = beta1 * m[j] + (1.0 - beta1) * g;
                v[j] = beta2 * v[j] + (1.0 - beta2) * g * g;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                if weight_decay != 0.0 {
                    *w *= decay;
                }
                *w -= lr * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_with_grad(p: f64, g: f64) -> Tensor {
        let mut t = Tensor::scalar(p).with_requires_grad(true);
        t.accumulate_grad(&[g]).unwrap();
        t
    }

    #[test]
    fn zero_gradient_without_decay_is_a_no_op() {
        let mut p = Tensor::new(vec![3], vec![1.0, -2.0, 0.5]).unwrap();
        p.accumulate_grad(&[0.0; 3]).unwrap();
        let before = p.clone();
        let mut opt = AdamState::new(AdamConfig::new(0.1, 0.0));
        for _ in 0..5 {
            opt.step(&mut [&mut p]).unwrap();
        }
        assert_eq!(p.values(), before.values());
        assert_eq!(opt.step_count(), 5);
    }

    #[test]
    fn positive_gradient_decreases_parameter() {
        let mut p = scalar_with_grad(1.0, 1.0);
        let mut opt = AdamState::new(AdamConfig::new(0.1, 0.0));
        opt.step(&mut [&mut p]).unwrap();
        assert!(p.values()[0] < 1.0);
        // first bias-corrected step has magnitude ~lr
        assert!((p.values()[0] - 0.9).abs() < 1e-6);
    }

    #[test]
    fn rejects_changed_parameter_list() {
        let mut a = scalar_with_grad(1.0, 1.0);
        let mut b = scalar_with_grad(1.0, 1.0);
        let mut opt = AdamState::new(AdamConfig::default());
        opt.step(&mut [&mut a]).unwrap();
        assert!(opt.step(&mut [&mut a, &mut b]).is_err());
    }
}
