//! Full model: parameters, state, composed forward and backward passes.

use rand::SeedableRng;

use super::attention::{attention_backward, attention_forward, l2_penalty, l2_penalty_grad, AttentionCache, AttentionParams};
use super::batchnorm::{batchnorm_backward, batchnorm_forward, BatchNormCache, BatchStats};
use super::embedding::{embedding_backward, embedding_forward};
use super::head::{output_head, output_head_backward, weighted_crossentropy, HeadCache};
use super::init::uniform;
use super::lstm::{bilstm_backward, bilstm_forward, BiLstmCache, BiLstmParams, Dropout, OutputActivation};
use super::{Mode, NeuralError, Rng, Tensor};
use crate::encode::EncodedTweet;
use crate::lexfeat::N_FEATURES;

const EMBEDDING_INIT: f64 = 0.05;
const LAYER1_ACTIVATION: OutputActivation = OutputActivation::Sigmoid;
const LAYER2_ACTIVATION: OutputActivation = OutputActivation::Tanh;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub seq_len: usize,
    pub d_emb: usize,
    pub h1: usize,
    pub h2: usize,
    pub n_feat: usize,
    pub n_classes: usize,
    pub dropout: f64,
    pub recurrent_dropout: f64,
    pub l2_attn_w: f64,
    pub l2_attn_b: f64,
    pub seed: u64,
}

impl ModelConfig {
    /// Default architecture: 128-d embeddings, BiLSTM(128) with 0.4 dropout,
    /// BiLSTM(64), 4 classes, λ = 1e-4 on the attention projection.
    pub fn new(vocab_size: usize, seq_len: usize) -> Self {
        Self {
            vocab_size,
            seq_len,
            d_emb: 128,
            h1: 128,
            h2: 64,
            n_feat: N_FEATURES,
            n_classes: 4,
            dropout: 0.4,
            recurrent_dropout: 0.4,
            l2_attn_w: 1e-4,
            l2_attn_b: 1e-4,
            seed: 0,
        }
    }

    /// Width of the attention input (both layer-2 directions).
    pub fn attention_dim(&self) -> usize {
        2 * self.h2
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let dims = [
            ("vocab_size", self.vocab_size),
            ("seq_len", self.seq_len),
            ("d_emb", self.d_emb),
            ("h1", self.h1),
            ("h2", self.h2),
            ("n_feat", self.n_feat),
            ("n_classes", self.n_classes),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(NeuralError::InvalidConfig(format!("{name} must be at least 1")));
        }
        for (name, p) in [("dropout", self.dropout), ("recurrent_dropout", self.recurrent_dropout)] {
            if !(0.0..1.0).contains(&p) {
                return Err(NeuralError::InvalidConfig(format!("{name} must lie in [0, 1), got {p}")));
            }
        }
        for (name, l) in [("l2_attn_w", self.l2_attn_w), ("l2_attn_b", self.l2_attn_b)] {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(NeuralError::InvalidConfig(format!("{name} must be a finite non-negative number")));
            }
        }
        Ok(())
    }

    fn layer1_dropout(&self) -> Dropout {
        Dropout { input: self.dropout, recurrent: self.recurrent_dropout }
    }
}

/// Every trainable tensor. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub embedding: Tensor,
    pub bn_gamma: Tensor,
    pub bn_beta: Tensor,
    pub lstm1: BiLstmParams,
    pub lstm2: BiLstmParams,
    pub attention: AttentionParams,
    pub out_w: Tensor,
    pub out_b: Tensor,
}

impl Parameters {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let a = cfg.attention_dim();
        Self {
            embedding: Tensor::zeros(&[cfg.vocab_size, cfg.d_emb]),
            bn_gamma: Tensor::zeros(&[cfg.d_emb]),
            bn_beta: Tensor::zeros(&[cfg.d_emb]),
            lstm1: BiLstmParams::zeros(cfg.d_emb, cfg.h1),
            lstm2: BiLstmParams::zeros(2 * cfg.h1, cfg.h2),
            attention: AttentionParams::zeros(a),
            out_w: Tensor::zeros(&[a + cfg.n_feat, cfg.n_classes]),
            out_b: Tensor::zeros(&[cfg.n_classes]),
        }
    }

    pub fn init(cfg: &ModelConfig, rng: &mut Rng) -> Self {
        let a = cfg.attention_dim();
        let embedding = uniform(&[cfg.vocab_size, cfg.d_emb], EMBEDDING_INIT, rng);
        let lstm1 = BiLstmParams::glorot(cfg.d_emb, cfg.h1, rng);
        let lstm2 = BiLstmParams::glorot(2 * cfg.h1, cfg.h2, rng);
        let attention = AttentionParams::glorot(a, rng);
        let out_w = super::glorot_uniform(a + cfg.n_feat, cfg.n_classes, rng);
        Self {
            embedding,
            bn_gamma: Tensor::filled(&[cfg.d_emb], 1.0),
            bn_beta: Tensor::zeros(&[cfg.d_emb]),
            lstm1,
            lstm2,
            attention,
            out_w,
            out_b: Tensor::zeros(&[cfg.n_classes]),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for (_, t) in z.named_mut() {
            t.data_mut().fill(0.0);
        }
        z
    }

    /// Stable names in checkpoint order.
    pub fn named(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("embedding", &self.embedding),
            ("bn.gamma", &self.bn_gamma),
            ("bn.beta", &self.bn_beta),
            ("lstm1.fwd.w", &self.lstm1.fwd.w),
            ("lstm1.fwd.u", &self.lstm1.fwd.u),
            ("lstm1.fwd.b", &self.lstm1.fwd.b),
            ("lstm1.bwd.w", &self.lstm1.bwd.w),
            ("lstm1.bwd.u", &self.lstm1.bwd.u),
            ("lstm1.bwd.b", &self.lstm1.bwd.b),
            ("lstm2.fwd.w", &self.lstm2.fwd.w),
            ("lstm2.fwd.u", &self.lstm2.fwd.u),
            ("lstm2.fwd.b", &self.lstm2.fwd.b),
            ("lstm2.bwd.w", &self.lstm2.bwd.w),
            ("lstm2.bwd.u", &self.lstm2.bwd.u),
            ("lstm2.bwd.b", &self.lstm2.bwd.b),
            ("attn.w", &self.attention.w),
            ("attn.b", &self.attention.b),
            ("attn.u", &self.attention.u),
            ("out.w", &self.out_w),
            ("out.b", &self.out_b),
        ]
    }

    pub fn named_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        vec![
            ("embedding", &mut self.embedding),
            ("bn.gamma", &mut self.bn_gamma),
            ("bn.beta", &mut self.bn_beta),
            ("lstm1.fwd.w", &mut self.lstm1.fwd.w),
            ("lstm1.fwd.u", &mut self.lstm1.fwd.u),
            ("lstm1.fwd.b", &mut self.lstm1.fwd.b),
            ("lstm1.bwd.w", &mut self.lstm1.bwd.w),
            ("lstm1.bwd.u", &mut self.lstm1.bwd.u),
            ("lstm1.bwd.b", &mut self.lstm1.bwd.b),
            ("lstm2.fwd.w", &mut self.lstm2.fwd.w),
            ("lstm2.fwd.u", &mut self.lstm2.fwd.u),
            ("lstm2.fwd.b", &mut self.lstm2.fwd.b),
            ("lstm2.bwd.w", &mut self.lstm2.bwd.w),
            ("lstm2.bwd.u", &mut self.lstm2.bwd.u),
            ("lstm2.bwd.b", &mut self.lstm2.bwd.b),
            ("attn.w", &mut self.attention.w),
            ("attn.b", &mut self.attention.b),
            ("attn.u", &mut self.attention.u),
            ("out.w", &mut self.out_w),
            ("out.b", &mut self.out_b),
        ]
    }
}

/// Parameters plus non-trainable buffers: batch-norm running statistics and
/// the frozen feature standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub config: ModelConfig,
    pub params: Parameters,
    pub bn_running_mean: Tensor,
    pub bn_running_var: Tensor,
    pub feat_mean: Tensor,
    pub feat_std: Tensor,
}

impl ModelState {
    /// Seeded initialization (embedding ±0.05, glorot weights, forget bias 1).
    pub fn init(config: ModelConfig, rng: &mut Rng) -> Result<Self, NeuralError> {
        config.validate()?;
        let params = Parameters::init(&config, rng);
        Ok(Self::with_params(config, params))
    }

    /// Initialization from `config.seed` alone.
    pub fn init_seeded(config: ModelConfig) -> Result<Self, NeuralError> {
        let mut rng = Rng::seed_from_u64(config.seed);
        Self::init(config, &mut rng)
    }

    /// All weights zero, γ = 1, identity feature standardization.
    pub fn zeros(config: ModelConfig) -> Result<Self, NeuralError> {
        config.validate()?;
        let mut params = Parameters::zeros(&config);
        params.bn_gamma.data_mut().fill(1.0);
        Ok(Self::with_params(config, params))
    }

    fn with_params(config: ModelConfig, params: Parameters) -> Self {
        Self {
            bn_running_mean: Tensor::zeros(&[config.d_emb]),
            bn_running_var: Tensor::filled(&[config.d_emb], 1.0),
            feat_mean: Tensor::zeros(&[config.n_feat]),
            feat_std: Tensor::filled(&[config.n_feat], 1.0),
            config,
            params,
        }
    }

    /// Freezes the feature standardization. Near-zero deviations become 1.
    pub fn set_feature_stats(&mut self, mean: &[f64], std: &[f64]) -> Result<(), NeuralError> {
        let n = self.config.n_feat;
        if mean.len() != n || std.len() != n {
            return Err(NeuralError::ShapeMismatch { what: "feature statistics".into(), expected: vec![n], found: vec![mean.len(), std.len()] });
        }
        self.feat_mean.data_mut().copy_from_slice(mean);
        for (dst, &s) in self.feat_std.data_mut().iter_mut().zip(std) {
            *dst = if s > 1e-12 { s } else { 1.0 };
        }
        Ok(())
    }

    pub fn standardize(&self, features: &Tensor) -> Tensor {
        let mut out = features.clone();
        let n = self.config.n_feat;
        for row in out.data_mut().chunks_exact_mut(n) {
            for ((v, m), s) in row.iter_mut().zip(self.feat_mean.data()).zip(self.feat_std.data()) {
                *v = (*v - m) / s;
            }
        }
        out
    }

    /// Folds the batch statistics of a train-mode forward pass into the
    /// running estimates.
    pub fn apply_batch_stats(&mut self, cache: &ForwardCache) {
        if let Some(stats) = &cache.bn_stats {
            stats.update_running(&mut self.bn_running_mean, &mut self.bn_running_var);
        }
    }

    pub fn l2_penalty(&self) -> f64 {
        l2_penalty(&self.params.attention, self.config.l2_attn_w, self.config.l2_attn_b)
    }

    /// Non-trainable tensors in checkpoint order.
    pub fn buffers(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("bn.running_mean", &self.bn_running_mean),
            ("bn.running_var", &self.bn_running_var),
            ("feat.mean", &self.feat_mean),
            ("feat.std", &self.feat_std),
        ]
    }

    pub fn buffers_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        vec![
            ("bn.running_mean", &mut self.bn_running_mean),
            ("bn.running_var", &mut self.bn_running_var),
            ("feat.mean", &mut self.feat_mean),
            ("feat.std", &mut self.feat_std),
        ]
    }

    pub fn all_finite(&self) -> bool {
        self.params.named().iter().chain(self.buffers().iter()).all(|(_, t)| t.all_finite())
    }
}

/// Encoded tweets with their raw (unstandardized) feature rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub tweets: Vec<EncodedTweet>,
    pub features: Tensor,
}

impl Batch {
    pub fn new(tweets: Vec<EncodedTweet>, features: Tensor) -> Self {
        Self { tweets, features }
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    /// Positions the recurrent layers visit. An empty tweet is read as a
    /// single PAD step so that every row has something to attend to.
    pub fn effective_lengths(&self) -> Vec<usize> {
        self.tweets.iter().map(|t| t.true_length.clamp(1, t.indices.len().max(1))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Signature {
    batch: usize,
    seq_len: usize,
    vocab: usize,
    d_emb: usize,
    h1: usize,
    h2: usize,
    n_feat: usize,
    n_classes: usize,
}

impl Signature {
    fn of(cfg: &ModelConfig, batch: usize) -> Self {
        Self {
            batch,
            seq_len: cfg.seq_len,
            vocab: cfg.vocab_size,
            d_emb: cfg.d_emb,
            h1: cfg.h1,
            h2: cfg.h2,
            n_feat: cfg.n_feat,
            n_classes: cfg.n_classes,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForwardCache {
    signature: Signature,
    tweets: Vec<EncodedTweet>,
    bn: BatchNormCache,
    bn_stats: Option<BatchStats>,
    lstm1: BiLstmCache,
    lstm2: BiLstmCache,
    h2: Tensor,
    attention: AttentionCache,
    head: HeadCache,
    /// Attention weights `[B, L]`.
    pub alpha: Tensor,
    pub probs: Tensor,
}

impl ForwardCache {
    pub fn batch_stats(&self) -> Option<&BatchStats> {
        self.bn_stats.as_ref()
    }
}

/// embedding → batch norm → BiLSTM-1 → BiLSTM-2 → attention → head.
///
/// `state` is not modified; in train mode the batch statistics are returned in
/// the cache for [`ModelState::apply_batch_stats`].
pub fn model_forward(batch: &Batch, state: &ModelState, mode: Mode, rng: &mut Rng) -> Result<(Tensor, ForwardCache), NeuralError> {
    let cfg = &state.config;
    let p = &state.params;
    let b = batch.len();
    for (i, t) in batch.tweets.iter().enumerate() {
        if t.indices.len() != cfg.seq_len {
            return Err(NeuralError::ShapeMismatch { what: format!("tweet {i}"), expected: vec![cfg.seq_len], found: vec![t.indices.len()] });
        }
    }
    batch.features.expect_shape("batch features", &[b, cfg.n_feat])?;
    let lengths = batch.effective_lengths();
    let mask: Vec<bool> = lengths.iter().flat_map(|&len| (0..cfg.seq_len).map(move |t| t < len)).collect();

    let emb = embedding_forward(&batch.tweets, &p.embedding)?;
    let (normed, bn, bn_stats) = batchnorm_forward(&emb, &p.bn_gamma, &p.bn_beta, &state.bn_running_mean, &state.bn_running_var, mode)?;
    let (h1, lstm1) = bilstm_forward(&normed, &lengths, &p.lstm1, LAYER1_ACTIVATION, cfg.layer1_dropout(), mode, rng)?;
    let (h2, lstm2) = bilstm_forward(&h1, &lengths, &p.lstm2, LAYER2_ACTIVATION, Dropout::NONE, mode, rng)?;
    let (context, alpha, attention) = attention_forward(&h2, &mask, &p.attention)?;
    let feats = state.standardize(&batch.features);
    let (probs, head) = output_head(&context, &feats, &p.out_w, &p.out_b)?;
    let cache = ForwardCache {
        signature: Signature::of(cfg, b),
        tweets: batch.tweets.clone(),
        bn,
        bn_stats,
        lstm1,
        lstm2,
        h2,
        attention,
        head,
        alpha,
        probs: probs.clone(),
    };
    Ok((probs, cache))
}

/// Reverse pass from `∂L/∂logits` to every parameter, including the
/// `2λ·W` and `2λ·b` attention regularizer terms.
pub fn model_backward(cache: &ForwardCache, grad_z: &Tensor, state: &ModelState) -> Result<Parameters, NeuralError> {
    let cfg = &state.config;
    let expected = Signature::of(cfg, cache.signature.batch);
    if cache.signature != expected {
        return Err(NeuralError::CacheMismatch(format!("cache built for {:?}, state is {:?}", cache.signature, expected)));
    }
    if grad_z.shape() != [cache.signature.batch, cfg.n_classes] {
        return Err(NeuralError::CacheMismatch(format!(
            "logit gradient has shape {:?}, cache expects [{}, {}]",
            grad_z.shape(),
            cache.signature.batch,
            cfg.n_classes
        )));
    }
    let p = &state.params;
    let mut g = p.zeros_like();
    let d_context = output_head_backward(&cache.head, &p.out_w, grad_z, &mut g.out_w, &mut g.out_b);
    let d_h2 = attention_backward(&cache.attention, &cache.h2, &p.attention, &d_context, &mut g.attention)?;
    l2_penalty_grad(&p.attention, cfg.l2_attn_w, cfg.l2_attn_b, &mut g.attention);
    let d_h1 = bilstm_backward(&cache.lstm2, &p.lstm2, LAYER2_ACTIVATION, &d_h2, &mut g.lstm2)?;
    let d_normed = bilstm_backward(&cache.lstm1, &p.lstm1, LAYER1_ACTIVATION, &d_h1, &mut g.lstm1)?;
    let d_emb = batchnorm_backward(&cache.bn, &p.bn_gamma, &d_normed, &mut g.bn_gamma, &mut g.bn_beta);
    embedding_backward(&cache.tweets, &d_emb, &mut g.embedding);
    Ok(g)
}

/// Weighted cross-entropy plus the attention L2 penalty.
pub fn batch_loss(batch: &Batch, gold: &[usize], class_weights: &[f64], state: &ModelState, mode: Mode, rng: &mut Rng) -> Result<f64, NeuralError> {
    let (probs, _) = model_forward(batch, state, mode, rng)?;
    Ok(weighted_crossentropy(&probs, gold, class_weights).0 + state.l2_penalty())
}

/// One forward/backward pass; returns the regularized loss, the gradients and
/// the cache (for running-statistics updates).
pub fn loss_and_gradients(
    batch: &Batch,
    gold: &[usize],
    class_weights: &[f64],
    state: &ModelState,
    mode: Mode,
    rng: &mut Rng,
) -> Result<(f64, Parameters, ForwardCache), NeuralError> {
    let (probs, cache) = model_forward(batch, state, mode, rng)?;
    let (loss, grad_z) = weighted_crossentropy(&probs, gold, class_weights);
    let grads = model_backward(&cache, &grad_z, state)?;
    Ok((loss + state.l2_penalty(), grads, cache))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::fd;

    fn toy_config() -> ModelConfig {
        ModelConfig { d_emb: 3, h1: 3, h2: 2, dropout: 0.3, recurrent_dropout: 0.3, l2_attn_w: 0.01, l2_attn_b: 0.02, seed: 17, ..ModelConfig::new(7, 4) }
    }

    fn toy_batch() -> Batch {
        let tweets = vec![
            EncodedTweet { indices: vec![2, 5, 1, 0], true_length: 3 },
            EncodedTweet { indices: vec![3, 3, 6, 4], true_length: 4 },
        ];
        let feats = (0..20).map(|i| ((i as f64) * 0.37).sin() * 3.0).collect();
        Batch::new(tweets, Tensor::from_vec(&[2, 10], feats).unwrap())
    }

    fn toy_state() -> ModelState {
        let mut state = ModelState::init_seeded(toy_config()).unwrap();
        // Non-trivial biases and standardization so every path carries signal.
        let mut rng = Rng::seed_from_u64(5);
        state.params.attention.b = uniform(&[4], 0.5, &mut rng);
        state.params.out_b = uniform(&[4], 0.5, &mut rng);
        state.params.bn_beta = uniform(&[3], 0.5, &mut rng);
        state.set_feature_stats(&[0.5; 10], &[2.0; 10]).unwrap();
        state
    }

    #[test]
    fn zero_model_is_uniform() {
        let cfg = ModelConfig { d_emb: 3, h1: 3, h2: 2, ..ModelConfig::new(5, 1) };
        let state = ModelState::zeros(cfg).unwrap();
        let batch = Batch::new(vec![EncodedTweet { indices: vec![3], true_length: 1 }], Tensor::zeros(&[1, 10]));
        let (probs, cache) = model_forward(&batch, &state, Mode::Infer, &mut Rng::seed_from_u64(0)).unwrap();
        assert!(probs.data().iter().all(|p| (p - 0.25).abs() < 1e-15));
        assert_eq!(cache.alpha.data(), [1.0]);
    }

    #[test]
    fn deterministic_forward() {
        let state = toy_state();
        let batch = toy_batch();
        let (a, _) = model_forward(&batch, &state, Mode::Train, &mut Rng::seed_from_u64(3)).unwrap();
        let (b, _) = model_forward(&batch, &state, Mode::Train, &mut Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        let (c, _) = model_forward(&batch, &state, Mode::Infer, &mut Rng::seed_from_u64(1)).unwrap();
        let (d, _) = model_forward(&batch, &state, Mode::Infer, &mut Rng::seed_from_u64(2)).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn empty_tweet_reads_one_pad_step() {
        let state = toy_state();
        let batch = Batch::new(vec![EncodedTweet { indices: vec![0; 4], true_length: 0 }], Tensor::zeros(&[1, 10]));
        let (probs, cache) = model_forward(&batch, &state, Mode::Infer, &mut Rng::seed_from_u64(0)).unwrap();
        assert!((probs.data().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(cache.alpha.data(), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_upstream_gradient() {
        let mut cfg = toy_config();
        cfg.l2_attn_w = 0.0;
        cfg.l2_attn_b = 0.0;
        let state = ModelState::init_seeded(cfg).unwrap();
        let (_, cache) = model_forward(&toy_batch(), &state, Mode::Train, &mut Rng::seed_from_u64(0)).unwrap();
        let g = model_backward(&cache, &Tensor::zeros(&[2, 4]), &state).unwrap();
        assert!(g.named().iter().all(|(_, t)| t.data().iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn unused_embedding_rows_get_no_gradient() {
        let state = toy_state();
        let (_, g, _) = loss_and_gradients(&toy_batch(), &[1, 3], &[1.0; 4], &state, Mode::Train, &mut Rng::seed_from_u64(0)).unwrap();
        // Index 0 is present as padding in row 0; rows 1..=6 except these are unused.
        assert!(g.embedding.row(0).iter().any(|v| *v != 0.0));
        for used in [1, 2, 3, 4, 5, 6] {
            assert!(g.embedding.row(used).iter().any(|v| *v != 0.0), "row {used}");
        }
        let batch = Batch::new(vec![EncodedTweet { indices: vec![2, 2, 0, 0], true_length: 2 }; 2], Tensor::zeros(&[2, 10]));
        let (_, g, _) = loss_and_gradients(&batch, &[0, 1], &[1.0; 4], &state, Mode::Train, &mut Rng::seed_from_u64(0)).unwrap();
        for unused in [1, 3, 4, 5, 6] {
            assert!(g.embedding.row(unused).iter().all(|v| *v == 0.0), "row {unused}");
        }
    }

    #[test]
    fn cache_mismatch() {
        let state = toy_state();
        let (_, cache) = model_forward(&toy_batch(), &state, Mode::Train, &mut Rng::seed_from_u64(0)).unwrap();
        let mut other = state.clone();
        other.config.h2 = 3;
        assert!(matches!(model_backward(&cache, &Tensor::zeros(&[2, 4]), &other), Err(NeuralError::CacheMismatch(_))));
        assert!(matches!(model_backward(&cache, &Tensor::zeros(&[3, 4]), &state), Err(NeuralError::CacheMismatch(_))));
    }

    #[test]
    fn full_model_gradient_check() {
        let state = toy_state();
        let batch = toy_batch();
        let gold = [1, 3];
        let weights = [0.6, 1.8, 0.9, 1.4];
        for mode in [Mode::Train, Mode::Infer] {
            let (_, grads, _) = loss_and_gradients(&batch, &gold, &weights, &state, mode, &mut Rng::seed_from_u64(21)).unwrap();
            let mut probe = state.clone();
            let names: Vec<&str> = state.params.named().iter().map(|(n, _)| *n).collect();
            for (name, analytic) in names.iter().zip(grads.named()) {
                let mut values = state.params.named().iter().find(|(n, _)| n == name).unwrap().1.data().to_vec();
                let err = fd::check(&mut values, analytic.1.data(), |v| {
                    for (n, t) in probe.params.named_mut() {
                        if n == *name {
                            t.data_mut().copy_from_slice(v);
                        }
                    }
                    batch_loss(&batch, &gold, &weights, &probe, mode, &mut Rng::seed_from_u64(21)).unwrap()
                });
                probe = state.clone();
                assert!(err < fd::TOL, "{mode:?} {name}: {err}");
            }
        }
    }
}
