//! Additive attention pooling with L2-regularized projection.
//!
//! `e_t = tanh(h_t·W + b)·u`, `α = softmax(e)` over unmasked positions,
//! `context = Σ α_t h_t`. Masked positions get exactly zero weight.

use super::init::glorot_uniform;
use super::tensor::{dot, mat_vec_acc, outer_acc, softmax_in_place, vec_mat_acc};
use super::{NeuralError, Rng, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub w: Tensor,
    pub b: Tensor,
    pub u: Tensor,
}

impl AttentionParams {
    pub fn zeros(dim: usize) -> Self {
        Self { w: Tensor::zeros(&[dim, dim]), b: Tensor::zeros(&[dim]), u: Tensor::zeros(&[dim]) }
    }

    pub fn glorot(dim: usize, rng: &mut Rng) -> Self {
        let w = glorot_uniform(dim, dim, rng);
        let u = glorot_uniform(dim, 1, rng);
        let u = Tensor::from_vec(&[dim], u.into_data()).expect("dim entries");
        Self { w, b: Tensor::zeros(&[dim]), u }
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }
}

#[derive(Debug, Clone)]
pub struct AttentionCache {
    seq_len: usize,
    dim: usize,
    /// `tanh(h_t·W + b)` per position (empty for masked positions).
    proj: Vec<Vec<f64>>,
    alpha: Tensor,
}

/// `h` is `[B, L, D]`, `mask` is `B·L` flags (true = real token). Returns
/// `(context [B, D], α [B, L], cache)`.
pub fn attention_forward(h: &Tensor, mask: &[bool], params: &AttentionParams) -> Result<(Tensor, Tensor, AttentionCache), NeuralError> {
    let dim = params.dim();
    let (batch, seq_len) = match *h.shape() {
        [b, l, d] if d == dim && b * l == mask.len() => (b, l),
        _ => {
            return Err(NeuralError::ShapeMismatch {
                what: "attention input".into(),
                expected: vec![mask.len(), dim],
                found: h.shape().to_vec(),
            })
        }
    };
    let mut context = Tensor::zeros(&[batch, dim]);
    let mut alpha = Tensor::zeros(&[batch, seq_len]);
    let mut proj = vec![Vec::new(); batch * seq_len];
    for b in 0..batch {
        let rows: Vec<usize> = (0..seq_len).map(|t| b * seq_len + t).filter(|&r| mask[r]).collect();
        if rows.is_empty() {
            return Err(NeuralError::AllPositionsMasked { row: b });
        }
        let mut scores = Vec::with_capacity(rows.len());
        for &r in &rows {
            let mut a = params.b.data().to_vec();
            vec_mat_acc(h.row(r), params.w.data(), &mut a);
            a.iter_mut().for_each(|v| *v = v.tanh());
            scores.push(dot(&a, params.u.data()));
            proj[r] = a;
        }
        softmax_in_place(&mut scores);
        let ctx = context.row_mut(b);
        for (&r, &weight) in rows.iter().zip(&scores) {
            alpha.data_mut()[r] = weight;
            for (c, v) in ctx.iter_mut().zip(h.row(r)) {
                *c += weight * v;
            }
        }
    }
    Ok((context, alpha.clone(), AttentionCache { seq_len, dim, proj, alpha }))
}

/// Accumulates parameter gradients (without the L2 term) and returns `∂L/∂h`.
pub fn attention_backward(
    cache: &AttentionCache,
    h: &Tensor,
    params: &AttentionParams,
    grad_context: &Tensor,
    grads: &mut AttentionParams,
) -> Result<Tensor, NeuralError> {
    let batch = cache.alpha.shape()[0];
    h.expect_shape("attention input", &[batch, cache.seq_len, cache.dim])?;
    grad_context.expect_shape("attention context gradient", &[batch, cache.dim])?;
    let mut dh = Tensor::zeros(h.shape());
    for b in 0..batch {
        let dctx = grad_context.row(b);
        let rows: Vec<usize> = (0..cache.seq_len).map(|t| b * cache.seq_len + t).filter(|&r| !cache.proj[r].is_empty()).collect();
        let d_alpha: Vec<f64> = rows.iter().map(|&r| dot(dctx, h.row(r))).collect();
        let expected: f64 = rows.iter().zip(&d_alpha).map(|(&r, d)| cache.alpha.data()[r] * d).sum();
        for (&r, &da) in rows.iter().zip(&d_alpha) {
            let a_r = cache.alpha.data()[r];
            let de = a_r * (da - expected);
            let proj = &cache.proj[r];
            for (g, p) in grads.u.data_mut().iter_mut().zip(proj) {
                *g += de * p;
            }
            let dpre: Vec<f64> = proj.iter().zip(params.u.data()).map(|(p, u)| de * u * (1.0 - p * p)).collect();
            outer_acc(h.row(r), &dpre, grads.w.data_mut());
            for (g, d) in grads.b.data_mut().iter_mut().zip(&dpre) {
                *g += d;
            }
            let dh_row = dh.row_mut(r);
            for (acc, c) in dh_row.iter_mut().zip(dctx) {
                *acc += a_r * c;
            }
            mat_vec_acc(params.w.data(), &dpre, dh_row);
        }
    }
    Ok(dh)
}

/// `λ_W‖W‖² + λ_b‖b‖²`.
pub fn l2_penalty(params: &AttentionParams, lambda_w: f64, lambda_b: f64) -> f64 {
    lambda_w * params.w.sum_squares() + lambda_b * params.b.sum_squares()
}

pub fn l2_penalty_grad(params: &AttentionParams, lambda_w: f64, lambda_b: f64, grads: &mut AttentionParams) {
    grads.w.add_scaled(&params.w, 2.0 * lambda_w);
    grads.b.add_scaled(&params.b, 2.0 * lambda_b);
}
