use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::dataset::TweetRecord;
use crate::encode::{EncodedTweet, Vocabulary, DEFAULT_MAX_SIZE, DEFAULT_MIN_FREQ, DEFAULT_SEQ_LEN};
use crate::lexfeat::{extract_features, Resources, N_FEATURES};
use crate::neural::{loss_and_gradients, model_forward, Batch, Mode, ModelConfig, ModelState, Rng, Tensor, PROB_FLOOR};
use crate::textprep::{normalize, RawTweet, TokenSequence};

use super::adam::{adam_step, AdamConfig, AdamState, DEFAULT_LR};
use super::history::{early_stop, EpochRecord, TrainHistory};
use super::metrics::{argmax, GroupedReport};
use super::split::{class_weights, stratified_split, DEFAULT_RATIO};
use super::{Label, TrainError};

pub const DEFAULT_BATCH_SIZE: usize = 32;
pub const DEFAULT_MAX_EPOCHS: usize = 100;
const INFER_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassWeighting {
    /// `N / (K·n_c)` over the classes present in the training split.
    Inverse,
    Uniform,
}

impl fmt::Display for ClassWeighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassWeighting::Inverse => "inverse",
            ClassWeighting::Uniform => "uniform",
        })
    }
}

impl FromStr for ClassWeighting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inverse" => Ok(ClassWeighting::Inverse),
            "uniform" => Ok(ClassWeighting::Uniform),
            other => Err(format!("unknown class weighting {other:?} (expected inverse or uniform)")),
        }
    }
}

/// Independent random streams derived from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedStream {
    Split = 1,
    Shuffle = 2,
    Init = 3,
    Dropout = 4,
}

pub fn sub_rng(seed: u64, stream: SeedStream) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub seed: u64,
    pub ratio: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub lr: f64,
    pub class_weighting: ClassWeighting,
    pub segment_hashtags: bool,
    /// Stop after two consecutive validation-loss rises.
    pub early_stopping: bool,
    pub seq_len: usize,
    pub min_freq: usize,
    pub max_vocab: usize,
    pub d_emb: usize,
    pub h1: usize,
    pub h2: usize,
    pub dropout: f64,
    pub recurrent_dropout: f64,
    pub l2_attn_w: f64,
    pub l2_attn_b: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let m = ModelConfig::new(DEFAULT_MAX_SIZE, DEFAULT_SEQ_LEN);
        Self {
            seed: 0,
            ratio: DEFAULT_RATIO,
            batch_size: DEFAULT_BATCH_SIZE,
            max_epochs: DEFAULT_MAX_EPOCHS,
            lr: DEFAULT_LR,
            class_weighting: ClassWeighting::Inverse,
            segment_hashtags: true,
            early_stopping: true,
            seq_len: DEFAULT_SEQ_LEN,
            min_freq: DEFAULT_MIN_FREQ,
            max_vocab: DEFAULT_MAX_SIZE,
            d_emb: m.d_emb,
            h1: m.h1,
            h2: m.h2,
            dropout: m.dropout,
            recurrent_dropout: m.recurrent_dropout,
            l2_attn_w: m.l2_attn_w,
            l2_attn_b: m.l2_attn_b,
        }
    }
}

impl TrainConfig {
    pub fn model_config(&self, vocab_size: usize) -> ModelConfig {
        ModelConfig {
            d_emb: self.d_emb,
            h1: self.h1,
            h2: self.h2,
            dropout: self.dropout,
            recurrent_dropout: self.recurrent_dropout,
            l2_attn_w: self.l2_attn_w,
            l2_attn_b: self.l2_attn_b,
            seed: self.seed,
            ..ModelConfig::new(vocab_size, self.seq_len)
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 {
            return Err(TrainError::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(TrainError::InvalidConfig(format!("lr must be finite and non-negative, got {}", self.lr)));
        }
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return Err(TrainError::InvalidConfig(format!("ratio must lie in (0, 1], got {}", self.ratio)));
        }
        if self.min_freq == 0 {
            return Err(TrainError::InvalidConfig("min_freq must be at least 1".into()));
        }
        if self.max_vocab < 2 {
            return Err(TrainError::InvalidConfig("max_vocab must leave room for PAD and UNK".into()));
        }
        self.model_config(2).validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: Label,
    pub probs: Vec<f64>,
}

/// Network state plus the preprocessing it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub state: ModelState,
    pub vocab: Vocabulary,
    pub segment_hashtags: bool,
}

impl TrainedModel {
    pub fn new(state: ModelState, vocab: Vocabulary, segment_hashtags: bool) -> Result<Self, TrainError> {
        if state.config.n_classes != Label::COUNT {
            return Err(TrainError::InvalidConfig(format!("model has {} classes, labels need {}", state.config.n_classes, Label::COUNT)));
        }
        if state.config.n_feat != N_FEATURES {
            return Err(TrainError::InvalidConfig(format!("model has {} features, extractor yields {N_FEATURES}", state.config.n_feat)));
        }
        if state.config.vocab_size != vocab.size() {
            return Err(TrainError::InvalidConfig(format!(
                "embedding has {} rows, vocabulary has {} entries",
                state.config.vocab_size,
                vocab.size()
            )));
        }
        Ok(Self { state, vocab, segment_hashtags })
    }

    pub fn prepare(&self, text: &str, resources: &Resources) -> Example {
        let (tokens, features) = tokens_and_features(text, self.segment_hashtags, resources);
        Example { encoded: self.vocab.encode(&tokens, self.state.config.seq_len), features }
    }

    pub fn predict(&self, raw: &RawTweet, resources: &Resources) -> Result<Prediction, TrainError> {
        let mut out = self.predict_texts(&[raw.text()], resources)?;
        Ok(out.pop().expect("one prediction per input"))
    }

    pub fn predict_texts(&self, texts: &[&str], resources: &Resources) -> Result<Vec<Prediction>, TrainError> {
        let examples: Vec<Example> = texts.iter().map(|t| self.prepare(t, resources)).collect();
        let refs: Vec<&Example> = examples.iter().collect();
        let probs = infer_probs(&self.state, &refs)?;
        Ok(probs.into_iter().map(to_prediction).collect())
    }

    /// Scores labeled records; unlabeled ones are an error.
    pub fn evaluate(&self, records: &[TweetRecord], resources: &Resources, group_by_dialect: bool) -> Result<GroupedReport, TrainError> {
        let gold = gold_labels(records)?;
        let texts: Vec<&str> = records.iter().map(|r| r.text.as_str()).collect();
        let pred: Vec<usize> = self.predict_texts(&texts, resources)?.iter().map(|p| p.label.index()).collect();
        let dialects: Vec<_> = records.iter().map(|r| r.dialect).collect();
        GroupedReport::from_predictions(&gold, &pred, &dialects, Label::COUNT, group_by_dialect)
    }
}

fn to_prediction(probs: Vec<f64>) -> Prediction {
    let label = Label::from_index(argmax(&probs)).expect("model has one output per label");
    Prediction { label, probs }
}

fn gold_labels(records: &[TweetRecord]) -> Result<Vec<usize>, TrainError> {
    records
        .iter()
        .map(|r| r.label.map(Label::index).ok_or_else(|| TrainError::Unlabeled { id: r.id.clone() }))
        .collect()
}

/// A tweet ready for the network: indices plus raw feature row.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub encoded: EncodedTweet,
    pub features: [f64; N_FEATURES],
}

fn tokens_and_features(text: &str, segment_hashtags: bool, resources: &Resources) -> (TokenSequence, [f64; N_FEATURES]) {
    let raw = RawTweet::new(text);
    let tokens = normalize(&raw, segment_hashtags);
    let features = extract_features(&raw, &tokens, resources).to_array();
    (tokens, features)
}

fn make_batch(examples: &[&Example]) -> Batch {
    let tweets = examples.iter().map(|e| e.encoded.clone()).collect();
    let data = examples.iter().flat_map(|e| e.features).collect();
    let features = Tensor::from_vec(&[examples.len(), N_FEATURES], data).expect("rows have N_FEATURES entries");
    Batch::new(tweets, features)
}

/// Infer-mode probabilities. Rows are independent in this mode, so chunking
/// does not change the result.
fn infer_probs(state: &ModelState, examples: &[&Example]) -> Result<Vec<Vec<f64>>, TrainError> {
    // Infer mode draws no dropout masks; the generator is never consumed.
    let mut rng = Rng::seed_from_u64(0);
    let mut out = Vec::with_capacity(examples.len());
    for chunk in examples.chunks(INFER_CHUNK) {
        let (probs, _) = model_forward(&make_batch(chunk), state, Mode::Infer, &mut rng)?;
        out.extend((0..chunk.len()).map(|r| probs.row(r).to_vec()));
    }
    Ok(out)
}

/// Unweighted mean cross-entropy plus the attention penalty, and accuracy.
fn loss_and_accuracy(state: &ModelState, examples: &[&Example], gold: &[usize]) -> Result<(f64, f64), TrainError> {
    if examples.is_empty() {
        return Ok((0.0, 0.0));
    }
    let probs = infer_probs(state, examples)?;
    let mut ce = 0.0;
    let mut correct = 0usize;
    for (p, &g) in probs.iter().zip(gold) {
        ce -= p[g].max(PROB_FLOOR).ln();
        correct += usize::from(argmax(p) == g);
    }
    let n = examples.len() as f64;
    Ok((ce / n + state.l2_penalty(), correct as f64 / n))
}

fn feature_stats(examples: &[&Example]) -> (Vec<f64>, Vec<f64>) {
    let n = examples.len().max(1) as f64;
    let mut mean = vec![0.0; N_FEATURES];
    for e in examples {
        for (m, x) in mean.iter_mut().zip(e.features) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; N_FEATURES];
    for e in examples {
        for ((v, x), m) in var.iter_mut().zip(e.features).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    (mean, var.iter().map(|v| (v / n).sqrt()).collect())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Weights from the epoch with the lowest validation loss.
    pub model: TrainedModel,
    /// Optimizer state matching `model`.
    pub adam: AdamState,
    pub history: TrainHistory,
    pub best_epoch: Option<usize>,
    pub class_weights: Vec<f64>,
    pub train_ids: Vec<String>,
    pub val_ids: Vec<String>,
    pub train_accuracy: f64,
    /// Accuracy on the validation split, or on the training split when the
    /// validation split is empty.
    pub val_accuracy: f64,
}

/// Shuffles the merged records, splits them, builds the vocabulary and
/// feature statistics on the training part, then runs minibatch Adam until
/// two consecutive validation-loss rises or `max_epochs`.
pub fn train(config: &TrainConfig, records: &[TweetRecord], resources: &Resources) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    if records.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let labels = gold_labels(records)?;

    let mut split_rng = sub_rng(config.seed, SeedStream::Split);
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut split_rng);
    let shuffled_labels: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
    let (train_pos, val_pos) = stratified_split(&shuffled_labels, config.ratio, &mut split_rng)?;
    let train_idx: Vec<usize> = train_pos.iter().map(|&p| order[p]).collect();
    let val_idx: Vec<usize> = val_pos.iter().map(|&p| order[p]).collect();

    let prepared: Vec<(TokenSequence, [f64; N_FEATURES])> =
        records.iter().map(|r| tokens_and_features(&r.text, config.segment_hashtags, resources)).collect();
    let train_tokens: Vec<TokenSequence> = train_idx.iter().map(|&i| prepared[i].0.clone()).collect();
    let vocab = Vocabulary::build(&train_tokens, config.min_freq, config.max_vocab)?;
    let examples: Vec<Example> = prepared
        .iter()
        .map(|(tokens, features)| Example { encoded: vocab.encode(tokens, config.seq_len), features: *features })
        .collect();
    let train_ex: Vec<&Example> = train_idx.iter().map(|&i| &examples[i]).collect();
    let train_gold: Vec<usize> = train_idx.iter().map(|&i| labels[i]).collect();
    let (val_ex, val_gold): (Vec<&Example>, Vec<usize>) = if val_idx.is_empty() {
        log::warn!("validation split is empty; validation metrics use the training split");
        (train_ex.clone(), train_gold.clone())
    } else {
        (val_idx.iter().map(|&i| &examples[i]).collect(), val_idx.iter().map(|&i| labels[i]).collect())
    };

    let model_cfg = config.model_config(vocab.size());
    let mut state = ModelState::init(model_cfg, &mut sub_rng(config.seed, SeedStream::Init))?;
    let (mean, std) = feature_stats(&train_ex);
    state.set_feature_stats(&mean, &std)?;

    let mut counts = vec![0usize; Label::COUNT];
    train_gold.iter().for_each(|&l| counts[l] += 1);
    let weights = match config.class_weighting {
        ClassWeighting::Uniform => vec![1.0; Label::COUNT],
        ClassWeighting::Inverse => {
            let present: Vec<usize> = counts.iter().copied().filter(|&c| c > 0).collect();
            let mut present_w = class_weights(&present)?.into_iter();
            counts.iter().map(|&c| if c > 0 { present_w.next().expect("one weight per present class") } else { 1.0 }).collect()
        }
    };
    log::info!(
        "{} train / {} validation records, vocabulary {}, class weights {:?}",
        train_idx.len(),
        val_idx.len(),
        vocab.size(),
        weights
    );

    let adam_cfg = AdamConfig { lr: config.lr, ..AdamConfig::default() };
    let mut adam = AdamState::new(adam_cfg, state.params.named().into_iter().map(|(_, t)| t));
    let mut shuffle_rng = sub_rng(config.seed, SeedStream::Shuffle);
    let mut dropout_rng = sub_rng(config.seed, SeedStream::Dropout);
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, ModelState, AdamState)> = None;

    for epoch in 1..=config.max_epochs {
        let started = Instant::now();
        let mut epoch_order: Vec<usize> = (0..train_ex.len()).collect();
        epoch_order.shuffle(&mut shuffle_rng);
        let (mut loss_sum, mut seen) = (0.0, 0usize);
        for chunk in epoch_order.chunks(config.batch_size) {
            if chunk.len() * config.seq_len < 2 {
                log::debug!("skipping a {}-row batch too small for batch statistics", chunk.len());
                continue;
            }
            let rows: Vec<&Example> = chunk.iter().map(|&i| train_ex[i]).collect();
            let gold: Vec<usize> = chunk.iter().map(|&i| train_gold[i]).collect();
            let (loss, grads, cache) = loss_and_gradients(&make_batch(&rows), &gold, &weights, &state, Mode::Train, &mut dropout_rng)?;
            let (names, mut params): (Vec<&str>, Vec<&mut Tensor>) = state.params.named_mut().into_iter().unzip();
            let grad_refs: Vec<&Tensor> = grads.named().into_iter().map(|(_, t)| t).collect();
            adam_step(&mut params, &grad_refs, &names, &mut adam)?;
            state.apply_batch_stats(&cache);
            loss_sum += loss * chunk.len() as f64;
            seen += chunk.len();
        }
        let train_loss = if seen == 0 { 0.0 } else { loss_sum / seen as f64 };
        let (val_loss, val_acc) = loss_and_accuracy(&state, &val_ex, &val_gold)?;
        let seconds = started.elapsed().as_secs_f64();
        log::info!("epoch {epoch}: train loss {train_loss:.5}, val loss {val_loss:.5}, val acc {val_acc:.4} ({seconds:.1}s)");
        history.push(EpochRecord { epoch, train_loss, val_loss, val_acc, seconds });
        if best.as_ref().map_or(true, |(b, _, _)| val_loss < *b) {
            best = Some((val_loss, state.clone(), adam.clone()));
        }
        if config.early_stopping && early_stop(&history) {
            log::info!("validation loss rose twice in a row; stopping after epoch {epoch}");
            break;
        }
    }

    let best_epoch = history.best_epoch();
    if let Some((_, s, a)) = best {
        state = s;
        adam = a;
    }
    let (_, train_accuracy) = loss_and_accuracy(&state, &train_ex, &train_gold)?;
    let (_, val_accuracy) = loss_and_accuracy(&state, &val_ex, &val_gold)?;
    let ids = |idx: &[usize]| idx.iter().map(|&i| records[i].id.clone()).collect();
    Ok(TrainOutcome {
        model: TrainedModel::new(state, vocab, config.segment_hashtags)?,
        adam,
        history,
        best_epoch,
        class_weights: weights,
        train_ids: ids(&train_idx),
        val_ids: ids(&val_idx),
        train_accuracy,
        val_accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dialect;

    fn tiny_config() -> TrainConfig {
        TrainConfig { seq_len: 6, d_emb: 4, h1: 3, h2: 2, batch_size: 4, max_epochs: 3, seed: 5, ..TrainConfig::default() }
    }

    fn tiny_corpus() -> Vec<TweetRecord> {
        let words = ["feliz", "triste", "normal", "nada"];
        (0..16)
            .map(|i| {
                let label = Label::ALL[i % 4];
                TweetRecord::new(format!("t{i}"), Dialect::Es, format!("{} dia {i}", words[i % 4]), Some(label))
            })
            .collect()
    }

    #[test]
    fn zero_model_predicts_first_label() {
        let vocab = Vocabulary::build(&[["a"].into_iter().collect()], 1, 100).unwrap();
        let cfg = ModelConfig { d_emb: 3, h1: 2, h2: 2, ..ModelConfig::new(vocab.size(), 5) };
        let model = TrainedModel::new(ModelState::zeros(cfg).unwrap(), vocab, true).unwrap();
        let res = Resources::default();
        for text in ["a b c", "", "¿?"] {
            let p = model.predict(&RawTweet::new(text), &res).unwrap();
            assert_eq!(p.label, Label::P);
            for &x in &p.probs {
                assert!((x - 0.25).abs() < 1e-12);
            }
            assert_eq!(p, model.predict(&RawTweet::new(text), &res).unwrap());
        }
    }

    #[test]
    fn zero_epochs() {
        let out = train(&TrainConfig { max_epochs: 0, ..tiny_config() }, &tiny_corpus(), &Resources::default()).unwrap();
        assert!(out.history.is_empty());
        assert_eq!(out.best_epoch, None);
        assert_eq!(out.adam.step, 0);
        let init = ModelState::init(out.model.state.config.clone(), &mut sub_rng(5, SeedStream::Init)).unwrap();
        assert_eq!(out.model.state.params, init.params);
    }

    #[test]
    fn deterministic_and_restores_best() {
        let a = train(&tiny_config(), &tiny_corpus(), &Resources::default()).unwrap();
        let b = train(&tiny_config(), &tiny_corpus(), &Resources::default()).unwrap();
        assert_eq!(a.history.val_losses(), b.history.val_losses());
        assert_eq!(a.model.state, b.model.state);
        assert_eq!(a.history.len(), 3);
        assert_eq!(a.train_ids.len(), 12);
        assert_eq!(a.val_ids.len(), 4);
        let best = a.history.epochs.iter().map(|e| e.val_loss).fold(f64::INFINITY, f64::min);
        let recs = tiny_corpus();
        let val: Vec<TweetRecord> = recs.iter().filter(|r| a.val_ids.contains(&r.id)).cloned().collect();
        let refs: Vec<Example> = val.iter().map(|r| a.model.prepare(&r.text, &Resources::default())).collect();
        let gold: Vec<usize> = val.iter().map(|r| r.label.unwrap().index()).collect();
        let (loss, _) = loss_and_accuracy(&a.model.state, &refs.iter().collect::<Vec<_>>(), &gold).unwrap();
        assert_eq!(loss, best);
    }

    #[test]
    fn errors() {
        let res = Resources::default();
        assert!(matches!(train(&tiny_config(), &[], &res), Err(TrainError::EmptyDataset)));
        let mut recs = tiny_corpus();
        recs[3].label = None;
        assert!(matches!(train(&tiny_config(), &recs, &res), Err(TrainError::Unlabeled { .. })));
        let bad = TrainConfig { batch_size: 0, ..tiny_config() };
        assert!(matches!(train(&bad, &tiny_corpus(), &res), Err(TrainError::InvalidConfig(_))));
    }

    #[test]
    fn weighting_names() {
        for w in [ClassWeighting::Inverse, ClassWeighting::Uniform] {
            assert_eq!(w.to_string().parse::<ClassWeighting>(), Ok(w));
        }
        assert!("balanced".parse::<ClassWeighting>().is_err());
    }
}
