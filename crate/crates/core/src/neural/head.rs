use super::tensor::{mat_vec_acc, outer_acc, softmax_in_place, vec_mat_acc};
use super::{NeuralError, Tensor};

/// Lower clamp on probabilities before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct HeadCache {
    /// `concat(context, features)` per row.
    input: Tensor,
    context_dim: usize,
}

/// `softmax(concat(context, feats)·W + b)`; `feats` must already be standardized.
pub fn output_head(context: &Tensor, feats: &Tensor, w_out: &Tensor, b_out: &Tensor) -> Result<(Tensor, HeadCache), NeuralError> {
    let batch = context.shape()[0];
    let (dc, df) = (context.row_len(), feats.row_len());
    feats.expect_shape("features", &[batch, df])?;
    let classes = b_out.len();
    w_out.expect_shape("output weights", &[dc + df, classes])?;
    let mut input = Tensor::zeros(&[batch, dc + df]);
    let mut probs = Tensor::zeros(&[batch, classes]);
    for b in 0..batch {
        let row = input.row_mut(b);
        row[..dc].copy_from_slice(context.row(b));
        row[dc..].copy_from_slice(feats.row(b));
        let z = probs.row_mut(b);
        z.copy_from_slice(b_out.data());
        vec_mat_acc(input.row(b), w_out.data(), z);
        softmax_in_place(z);
    }
    Ok((probs, HeadCache { input, context_dim: dc }))
}

/// Takes `∂L/∂z` (pre-softmax), accumulates into `grad_w`/`grad_b`, and
/// returns `∂L/∂context`.
pub fn output_head_backward(cache: &HeadCache, w_out: &Tensor, grad_z: &Tensor, grad_w: &mut Tensor, grad_b: &mut Tensor) -> Tensor {
    let batch = grad_z.shape()[0];
    let mut d_context = Tensor::zeros(&[batch, cache.context_dim]);
    let mut d_input = vec![0.0; cache.input.row_len()];
    for b in 0..batch {
        let dz = grad_z.row(b);
        outer_acc(cache.input.row(b), dz, grad_w.data_mut());
        for (g, d) in grad_b.data_mut().iter_mut().zip(dz) {
            *g += d;
        }
        d_input.fill(0.0);
        mat_vec_acc(w_out.data(), dz, &mut d_input);
        d_context.row_mut(b).copy_from_slice(&d_input[..cache.context_dim]);
    }
    d_context
}

/// `(1/B) Σ_b w[y_b]·(−log p[b, y_b])` and its gradient with respect to the
/// logits, `w[y_b]·(p_b − onehot(y_b))/B`.
pub fn weighted_crossentropy(probs: &Tensor, gold: &[usize], class_weights: &[f64]) -> (f64, Tensor) {
    let batch = gold.len();
    let scale = 1.0 / batch as f64;
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(probs.shape());
    for (b, &y) in gold.iter().enumerate() {
        let w = class_weights[y];
        loss += w * -probs.row(b)[y].max(PROB_FLOOR).ln();
        let g = grad.row_mut(b);
        for (k, (gk, p)) in g.iter_mut().zip(probs.row(b)).enumerate() {
            let target = if k == y { 1.0 } else { 0.0 };
            *gk = w * (p - target) * scale;
        }
    }
    (loss * scale, grad)
}
