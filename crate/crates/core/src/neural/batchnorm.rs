//! Per-channel batch normalization over every `[.., C]` position.

use super::{Mode, NeuralError, Tensor};

pub const BN_EPS: f64 = 1e-5;
/// Weight on the old running value: `running ← m·running + (1−m)·batch`.
pub const BN_MOMENTUM: f64 = 0.99;

/// Biased per-channel statistics of one training batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl BatchStats {
    /// Folds these statistics into running estimates.
    pub fn update_running(&self, running_mean: &mut Tensor, running_var: &mut Tensor) {
        for (r, m) in running_mean.data_mut().iter_mut().zip(&self.mean) {
            *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * m;
        }
        for (r, v) in running_var.data_mut().iter_mut().zip(&self.var) {
            *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * v;
        }
    }
}

#[derive(Debug, Clone)]
pub struct BatchNormCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    mode: Mode,
    channels: usize,
}

/// Train mode normalizes with batch statistics (returned so the caller can
/// update running estimates); infer mode uses the running estimates.
pub fn batchnorm_forward(
    x: &Tensor,
    gamma: &Tensor,
    beta: &Tensor,
    running_mean: &Tensor,
    running_var: &Tensor,
    mode: Mode,
) -> Result<(Tensor, BatchNormCache, Option<BatchStats>), NeuralError> {
    let c = x.row_len();
    let n = x.len() / c.max(1);
    let (mean, var) = match mode {
        Mode::Train => {
            if n < 2 {
                return Err(NeuralError::DegenerateBatch { positions: n });
            }
            let mut mean = vec![0.0; c];
            for row in x.data().chunks_exact(c) {
                for (m, v) in mean.iter_mut().zip(row) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= n as f64);
            let mut var = vec![0.0; c];
            for row in x.data().chunks_exact(c) {
                for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
            var.iter_mut().for_each(|s| *s /= n as f64);
            (mean, var)
        }
        Mode::Infer => (running_mean.data().to_vec(), running_var.data().to_vec()),
    };
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
    let mut xhat = vec![0.0; x.len()];
    let mut y = Tensor::zeros(x.shape());
    for ((x_row, xh_row), y_row) in x.data().chunks_exact(c).zip(xhat.chunks_exact_mut(c)).zip(y.data_mut().chunks_exact_mut(c)) {
        for j in 0..c {
            xh_row[j] = (x_row[j] - mean[j]) * inv_std[j];
            y_row[j] = gamma.data()[j] * xh_row[j] + beta.data()[j];
        }
    }
    let stats = (mode == Mode::Train).then_some(BatchStats { mean, var });
    Ok((y, BatchNormCache { xhat, inv_std, mode, channels: c }, stats))
}

/// Accumulates into `grad_gamma`/`grad_beta` and returns the input gradient.
pub fn batchnorm_backward(
    cache: &BatchNormCache,
    gamma: &Tensor,
    grad_out: &Tensor,
    grad_gamma: &mut Tensor,
    grad_beta: &mut Tensor,
) -> Tensor {
    let c = cache.channels;
    let n = cache.xhat.len() / c;
    let mut sum_dy = vec![0.0; c];
    let mut sum_dy_xhat = vec![0.0; c];
    for (dy_row, xh_row) in grad_out.data().chunks_exact(c).zip(cache.xhat.chunks_exact(c)) {
        for j in 0..c {
            sum_dy[j] += dy_row[j];
            sum_dy_xhat[j] += dy_row[j] * xh_row[j];
        }
    }
    for j in 0..c {
        grad_gamma.data_mut()[j] += sum_dy_xhat[j];
        grad_beta.data_mut()[j] += sum_dy[j];
    }
    let mut dx = Tensor::zeros(grad_out.shape());
    let nf = n as f64;
    for ((dx_row, dy_row), xh_row) in dx.data_mut().chunks_exact_mut(c).zip(grad_out.data().chunks_exact(c)).zip(cache.xhat.chunks_exact(c)) {
        for j in 0..c {
            let scale = gamma.data()[j] * cache.inv_std[j];
            dx_row[j] = match cache.mode {
                Mode::Train => scale * (dy_row[j] - sum_dy[j] / nf - xh_row[j] * sum_dy_xhat[j] / nf),
                Mode::Infer => scale * dy_row[j],
            };
        }
    }
    dx
}
