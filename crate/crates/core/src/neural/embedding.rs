use super::{NeuralError, Tensor};
use crate::encode::EncodedTweet;

/// Row lookup: `[B, L]` indices → `[B, L, d]`. PAD rows pass through.
pub fn embedding_forward(batch: &[EncodedTweet], table: &Tensor) -> Result<Tensor, NeuralError> {
    let vocab = table.shape()[0];
    let dim = table.row_len();
    let seq_len = batch.first().map_or(0, |t| t.indices.len());
    let mut out = Tensor::zeros(&[batch.len(), seq_len, dim]);
    for (b, tweet) in batch.iter().enumerate() {
        if tweet.indices.len() != seq_len {
            return Err(NeuralError::ShapeMismatch {
                what: format!("batch row {b}"),
                expected: vec![seq_len],
                found: vec![tweet.indices.len()],
            });
        }
        for (t, &index) in tweet.indices.iter().enumerate() {
            if index >= vocab {
                return Err(NeuralError::IndexOutOfRange { index, vocab });
            }
            out.row_mut(b * seq_len + t).copy_from_slice(table.row(index));
        }
    }
    Ok(out)
}

/// Scatter-adds `grad_out` rows into the looked-up rows of `grad_table`.
pub fn embedding_backward(batch: &[EncodedTweet], grad_out: &Tensor, grad_table: &mut Tensor) {
    let seq_len = batch.first().map_or(0, |t| t.indices.len());
    for (b, tweet) in batch.iter().enumerate() {
        for (t, &index) in tweet.indices.iter().enumerate() {
            let g = grad_out.row(b * seq_len + t);
            for (acc, v) in grad_table.row_mut(index).iter_mut().zip(g) {
                *acc += v;
            }
        }
    }
}
