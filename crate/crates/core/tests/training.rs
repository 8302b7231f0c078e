mod common;

use proptest::prelude::*;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sentilab::lexfeat::Resources;
use sentilab::neural::Tensor;
use sentilab::traineval::{
    adam_step, class_weights, stop_on_rises, train, AdamConfig, AdamState, MetricsReport, TrainConfig,
};

proptest! {
    #[test]
    fn frequency_weighted_mean_of_weights_is_one(counts in prop::collection::vec(1usize..100_000, 1..8)) {
        let w = class_weights(&counts).unwrap();
        let n: usize = counts.iter().sum();
        let mean: f64 = w.iter().zip(&counts).map(|(w, &c)| w * c as f64).sum::<f64>() / n as f64;
        prop_assert!((mean - 1.0).abs() < 1e-12, "{}", mean);
    }

    #[test]
    fn adam_with_zero_lr_is_bit_identical(
        theta in prop::collection::vec(-1e3f64..1e3, 1..20),
        grad_seed in any::<u64>(),
        steps in 1usize..5,
    ) {
        let mut t = Tensor::from_vec(&[theta.len()], theta.clone()).unwrap();
        let mut adam = AdamState::new(AdamConfig { lr: 0.0, ..AdamConfig::default() }, [&t]);
        let mut rng = ChaCha8Rng::seed_from_u64(grad_seed);
        for _ in 0..steps {
            let g = Tensor::from_vec(&[theta.len()], (0..theta.len()).map(|_| rng.gen_range(-1e6..1e6)).collect()).unwrap();
            adam_step(&mut [&mut t], &[&g], &["theta"], &mut adam).unwrap();
        }
        prop_assert_eq!(t.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>(), theta.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        prop_assert!(adam.v[0].data().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn early_stop_never_before_third_epoch(losses in prop::collection::vec(0.0f64..10.0, 0..3)) {
        for n in 0..=losses.len() {
            prop_assert!(!stop_on_rises(&losses[..n]));
        }
    }

    #[test]
    fn macro_f1_invariant_under_relabeling(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..200),
        perm in Just([0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        let gold: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let pred: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let a = MetricsReport::from_predictions(&gold, &pred, 4).unwrap();
        let gold2: Vec<usize> = gold.iter().map(|&g| perm[g]).collect();
        let pred2: Vec<usize> = pred.iter().map(|&p| perm[p]).collect();
        let b = MetricsReport::from_predictions(&gold2, &pred2, 4).unwrap();
        prop_assert!((a.macro_f1 - b.macro_f1).abs() < 1e-12);
        for c in 0..4 {
            prop_assert_eq!(a.classes[c], b.classes[perm[c]]);
        }
    }

    #[test]
    fn report_values_in_range(pairs in prop::collection::vec((0usize..4, 0usize..4), 1..200)) {
        let gold: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let pred: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let r = MetricsReport::from_predictions(&gold, &pred, 4).unwrap();
        prop_assert_eq!(r.classes.iter().map(|c| c.support).sum::<usize>(), pairs.len());
        for v in r.classes.iter().flat_map(|c| [c.precision, c.recall, c.f1]).chain([r.macro_precision, r.macro_recall, r.macro_f1, r.accuracy]) {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn metrics_match_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let gold: Vec<usize> = (0..1000).map(|_| rng.gen_range(0..4)).collect();
    let pred: Vec<usize> = (0..1000).map(|_| rng.gen_range(0..4)).collect();
    let report = MetricsReport::from_predictions(&gold, &pred, 4).unwrap();
    for (c, (p, r, f)) in common::brute_force_prf(&gold, &pred, 4).into_iter().enumerate() {
        assert!((report.classes[c].precision - p).abs() <= 1e-12);
        assert!((report.classes[c].recall - r).abs() <= 1e-12);
        assert!((report.classes[c].f1 - f).abs() <= 1e-12);
    }
}

#[test]
fn returned_model_has_lowest_recorded_validation_loss() {
    let cfg = TrainConfig { seq_len: 8, d_emb: 8, h1: 6, h2: 4, batch_size: 8, max_epochs: 15, seed: 9, ..TrainConfig::default() };
    let records = common::separable_corpus();
    let out = train(&cfg, &records, &Resources::default()).unwrap();
    assert!(!out.history.is_empty());
    let val: Vec<_> = records.iter().filter(|r| out.val_ids.contains(&r.id)).cloned().collect();
    // Recompute the validation loss of the returned weights from scratch.
    let texts: Vec<&str> = val.iter().map(|r| r.text.as_str()).collect();
    let preds = out.model.predict_texts(&texts, &Resources::default()).unwrap();
    let ce: f64 = preds.iter().zip(&val).map(|(p, r)| -p.probs[r.label.unwrap().index()].max(1e-12).ln()).sum::<f64>() / val.len() as f64;
    let loss = ce + out.model.state.l2_penalty();
    for e in &out.history.epochs {
        assert!(loss <= e.val_loss + 1e-12, "epoch {}: {} < {}", e.epoch, e.val_loss, loss);
    }
    let best = out.best_epoch.unwrap();
    assert!((loss - out.history.epochs[best - 1].val_loss).abs() < 1e-12);
}

#[test]
fn training_is_deterministic() {
    let cfg = TrainConfig { seq_len: 6, d_emb: 8, h1: 4, h2: 3, batch_size: 8, max_epochs: 4, seed: 21, ..TrainConfig::default() };
    let records = common::separable_corpus();
    let a = train(&cfg, &records, &Resources::default()).unwrap();
    let b = train(&cfg, &records, &Resources::default()).unwrap();
    let strip = |h: &sentilab::traineval::TrainHistory| h.epochs.iter().map(|e| (e.train_loss.to_bits(), e.val_loss.to_bits(), e.val_acc.to_bits())).collect::<Vec<_>>();
    assert_eq!(strip(&a.history), strip(&b.history));
    assert_eq!(a.model, b.model);
    assert_eq!(a.adam, b.adam);
    let c = train(&TrainConfig { seed: 22, ..cfg }, &records, &Resources::default()).unwrap();
    assert_ne!(strip(&a.history), strip(&c.history));
}
