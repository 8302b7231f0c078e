use crate::neural::Tensor;

use super::TrainError;

pub const DEFAULT_LR: f64 = 0.0005;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: DEFAULT_LR, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moments for a fixed list of parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

impl AdamState {
    pub fn new<'a>(config: AdamConfig, params: impl IntoIterator<Item = &'a Tensor>) -> Self {
        let m: Vec<Tensor> = params.into_iter().map(Tensor::zeros_like).collect();
        let v = m.clone();
        Self { config, step: 0, m, v }
    }
}

/// One bias-corrected Adam update. `names` label the tensors in error
/// messages. Nothing is modified if any gradient is non-finite.
pub fn adam_step(params: &mut [&mut Tensor], grads: &[&Tensor], names: &[&str], adam: &mut AdamState) -> Result<(), TrainError> {
    let n = params.len();
    if grads.len() != n || adam.m.len() != n || names.len() != n {
        return Err(TrainError::ShapeMismatch(format!(
            "{n} parameters, {} gradients, {} moment tensors, {} names",
            grads.len(),
            adam.m.len(),
            names.len()
        )));
    }
    for i in 0..n {
        if params[i].shape() != grads[i].shape() || params[i].shape() != adam.m[i].shape() {
            return Err(TrainError::ShapeMismatch(format!(
                "{}: parameter {:?}, gradient {:?}, moments {:?}",
                names[i],
                params[i].shape(),
                grads[i].shape(),
                adam.m[i].shape()
            )));
        }
        if !grads[i].all_finite() {
            return Err(TrainError::NonfiniteGradient(names[i].to_string()));
        }
    }

    let AdamConfig { lr, beta1, beta2, eps } = adam.config;
    adam.step += 1;
    let t = adam.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for i in 0..n {
        let theta = params[i].data_mut();
        let g = grads[i].data();
        let m = adam.m[i].data_mut();
        let v = adam.v[i].data_mut();
        for j in 0..theta.len() {
            m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
            v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
            let update = lr * (m[j] / c1) / ((v[j] / c2).sqrt() + eps);
            // Skipping exact zeros keeps the sign bit of -0.0 parameters.
            if update != 0.0 {
                theta[j] -= update;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f64) -> Tensor {
        Tensor::filled(&[1], x)
    }

    fn step(theta: &mut Tensor, g: f64, adam: &mut AdamState) {
        let grad = scalar(g);
        adam_step(&mut [theta], &[&grad], &["theta"], adam).unwrap();
    }

    #[test]
    fn first_step_is_lr() {
        let mut theta = scalar(0.0);
        let mut adam = AdamState::new(AdamConfig::default(), [&theta]);
        step(&mut theta, 1.0, &mut adam);
        // m̂ = 1, v̂ = 1, so Δ = lr / (1 + ε).
        let expected = -DEFAULT_LR / (1.0 + 1e-8);
        assert!((theta.data()[0] - expected).abs() < 1e-15);
        assert!((theta.data()[0].abs() - DEFAULT_LR).abs() < 1e-9);
        assert_eq!(adam.step, 1);
    }

    #[test]
    fn constant_gradient_steps() {
        let mut theta = scalar(0.0);
        let mut adam = AdamState::new(AdamConfig::default(), [&theta]);
        let mut prev = 0.0;
        for _ in 0..2 {
            step(&mut theta, 1.0, &mut adam);
            let delta = prev - theta.data()[0];
            assert!(delta >= 0.9 * DEFAULT_LR && delta <= DEFAULT_LR, "{delta}");
            prev = theta.data()[0];
        }
    }

    #[test]
    fn zero_gradient_is_noop() {
        let mut a = Tensor::from_vec(&[3], vec![0.5, -0.0, 2.0]).unwrap();
        let before = a.clone();
        let mut adam = AdamState::new(AdamConfig::default(), [&a]);
        let g = Tensor::zeros(&[3]);
        for _ in 0..3 {
            adam_step(&mut [&mut a], &[&g], &["a"], &mut adam).unwrap();
        }
        assert_eq!(a.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>(), before.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn nonfinite_gradient_rejected_before_update() {
        let mut a = scalar(1.0);
        let mut b = scalar(1.0);
        let mut adam = AdamState::new(AdamConfig::default(), [&a, &b]);
        let (ga, gb) = (scalar(1.0), scalar(f64::NAN));
        let err = adam_step(&mut [&mut a, &mut b], &[&ga, &gb], &["a", "b"], &mut adam).unwrap_err();
        assert!(matches!(err, TrainError::NonfiniteGradient(ref n) if n == "b"));
        assert_eq!(a.data()[0], 1.0);
        assert_eq!(adam.step, 0);
        assert_eq!(adam.m[0].data()[0], 0.0);
    }

    #[test]
    fn shape_mismatch() {
        let mut a = Tensor::zeros(&[2]);
        let mut adam = AdamState::new(AdamConfig::default(), [&a]);
        let g = Tensor::zeros(&[3]);
        assert!(matches!(adam_step(&mut [&mut a], &[&g], &["a"], &mut adam), Err(TrainError::ShapeMismatch(_))));
    }
}
