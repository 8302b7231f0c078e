use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use crate::dataset::{load_dataset, TweetRecord};
use crate::encode::Vocabulary;
use crate::lexfeat::{BilingualTable, Language, Resources, SentimentLexicon, FEATURE_NAMES};
use crate::neural::checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
use crate::neural::Tensor;
use crate::traineval::{train, AdamConfig, AdamState, GroupedReport, Prediction, TrainOutcome, TrainedModel};

use super::config::RunConfig;
use super::report::{ablation_csv, ablation_text, eval_table_text, metrics_csv, AblationRow, LabelStats};

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const VOCAB_FILE: &str = "vocab.tsv";
pub const FEATURES_FILE: &str = "features.tsv";
pub const HISTORY_FILE: &str = "history.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).with_context(|| format!("writing {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_file(path, |w| w.write_all(text.as_bytes()))
}

/// Lexicons and table named in the config; missing entries stay empty.
pub fn load_resources(cfg: &RunConfig) -> Result<Resources> {
    let mut res = Resources::default();
    if let Some(p) = &cfg.lexicon_es {
        res.lex_es = SentimentLexicon::load_path(p, Language::Es).with_context(|| format!("loading {}", p.display()))?;
    }
    if let Some(p) = &cfg.lexicon_en {
        res.lex_en = SentimentLexicon::load_path(p, Language::En).with_context(|| format!("loading {}", p.display()))?;
    }
    if let Some(p) = &cfg.bilingual_table {
        res.table = BilingualTable::load_path(p).with_context(|| format!("loading {}", p.display()))?;
    }
    if res.lex_es.is_empty() && res.lex_en.is_empty() {
        log::warn!("no lexicons configured; lexicon features will be zero");
    }
    Ok(res)
}

/// Concatenates datasets, rejecting ids that repeat across files.
pub fn load_records(paths: &[PathBuf]) -> Result<Vec<TweetRecord>> {
    let mut out: Vec<TweetRecord> = Vec::new();
    let mut ids = HashSet::new();
    for p in paths {
        let data = load_dataset(p).with_context(|| format!("loading {}", p.display()))?;
        for r in data.records {
            if !ids.insert(r.id.clone()) {
                bail!("{}: id {:?} already appears in an earlier file", p.display(), r.id);
            }
            out.push(r);
        }
    }
    Ok(out)
}

fn training_records(cfg: &RunConfig) -> Result<Vec<TweetRecord>> {
    let Some(train_file) = &cfg.train_file else { bail!("config needs train_file") };
    let mut paths = vec![train_file.clone()];
    paths.extend(cfg.dev_file.clone());
    let records = load_records(&paths)?;
    log::info!("{} records loaded for training", records.len());
    Ok(records)
}

pub fn cmd_stats(records: &[TweetRecord], out: Option<&Path>) -> Result<LabelStats> {
    let stats = LabelStats::from_records(records);
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        write_text(&dir.join("stats.txt"), &stats.to_text())?;
        write_text(&dir.join("stats.csv"), &stats.to_csv())?;
    }
    Ok(stats)
}

/// Trains from the config and writes checkpoint, vocabulary, feature
/// statistics, history and manifest to `cfg.out_dir`.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutcome> {
    cfg.check_paths()?;
    let resources = load_resources(cfg)?;
    let records = training_records(cfg)?;
    let outcome = train(&cfg.train, &records, &resources)?;
    save_run(&cfg.out_dir, cfg, &outcome)?;
    Ok(outcome)
}

pub fn save_run(dir: &Path, cfg: &RunConfig, outcome: &TrainOutcome) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let model = &outcome.model;
    let seq_len = model.state.config.seq_len;
    write_file(&dir.join(VOCAB_FILE), |w| model.vocab.write(w, seq_len))?;
    write_file(&dir.join(FEATURES_FILE), |w| {
        writeln!(w, "feature\tmean\tstd")?;
        for ((name, m), s) in FEATURE_NAMES.iter().zip(model.state.feat_mean.data()).zip(model.state.feat_std.data()) {
            writeln!(w, "{name}\t{m}\t{s}")?;
        }
        Ok(())
    })?;
    write_file(&dir.join(HISTORY_FILE), |w| outcome.history.write_csv(w, cfg.record_wall_time))?;
    let manifest = RunConfig { out_dir: dir.to_path_buf(), ..cfg.clone() };
    write_file(&dir.join(MANIFEST_FILE), |w| manifest.write(w))?;

    let adam = &outcome.adam;
    let mut extra = BTreeMap::new();
    extra.insert("segment_hashtags".to_string(), model.segment_hashtags.to_string());
    extra.insert("epochs_run".to_string(), outcome.history.len().to_string());
    extra.insert("best_epoch".to_string(), outcome.best_epoch.map_or(String::new(), |e| e.to_string()));
    extra.insert("adam_step".to_string(), adam.step.to_string());
    extra.insert("adam_lr".to_string(), adam.config.lr.to_string());
    extra.insert("adam_beta1".to_string(), adam.config.beta1.to_string());
    extra.insert("adam_beta2".to_string(), adam.config.beta2.to_string());
    extra.insert("adam_eps".to_string(), adam.config.eps.to_string());
    let names: Vec<&str> = model.state.params.named().into_iter().map(|(n, _)| n).collect();
    let mut tensors: Vec<(String, &Tensor)> = Vec::new();
    for (i, n) in names.iter().enumerate() {
        tensors.push((format!("adam.m.{n}"), &adam.m[i]));
        tensors.push((format!("adam.v.{n}"), &adam.v[i]));
    }
    write_file(&dir.join(CHECKPOINT_FILE), |w| {
        write_checkpoint(w, &model.state, &extra, &tensors).map_err(|e| std::io::Error::new(std::io::ErrorKind::Other, e))
    })?;
    log::info!("wrote run artifacts to {}", dir.display());
    Ok(())
}

/// Optimizer state stored next to the weights, for resuming a run.
pub fn adam_from_checkpoint(ckpt: &Checkpoint) -> Result<AdamState> {
    let field = |k: &str| -> Result<f64> {
        ckpt.extra_manifest.get(k).with_context(|| format!("checkpoint lacks {k}"))?.parse().with_context(|| format!("malformed {k}"))
    };
    let config = AdamConfig { lr: field("adam_lr")?, beta1: field("adam_beta1")?, beta2: field("adam_beta2")?, eps: field("adam_eps")? };
    let step = ckpt.extra_manifest.get("adam_step").context("checkpoint lacks adam_step")?.parse()?;
    let tensors: BTreeMap<&str, &Tensor> = ckpt.extra_tensors.iter().map(|(n, t)| (n.as_str(), t)).collect();
    let mut adam = AdamState::new(config, ckpt.state.params.named().into_iter().map(|(_, t)| t));
    adam.step = step;
    for (i, (name, p)) in ckpt.state.params.named().into_iter().enumerate() {
        for (kind, dst) in [("m", &mut adam.m[i]), ("v", &mut adam.v[i])] {
            let key = format!("adam.{kind}.{name}");
            let src = tensors.get(key.as_str()).with_context(|| format!("checkpoint lacks {key}"))?;
            if src.shape() != p.shape() {
                bail!("{key} has shape {:?}, parameter has {:?}", src.shape(), p.shape());
            }
            *dst = (*src).clone();
        }
    }
    Ok(adam)
}

pub struct LoadedRun {
    pub model: TrainedModel,
    pub config: RunConfig,
    pub checkpoint: Checkpoint,
}

pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    let ckpt_path = dir.join(CHECKPOINT_FILE);
    let file = fs::File::open(&ckpt_path).with_context(|| format!("opening {}", ckpt_path.display()))?;
    let checkpoint = read_checkpoint(BufReader::new(file)).with_context(|| format!("reading {}", ckpt_path.display()))?;
    let vocab_path = dir.join(VOCAB_FILE);
    let (vocab, seq_len) = Vocabulary::read(BufReader::new(fs::File::open(&vocab_path).with_context(|| format!("opening {}", vocab_path.display()))?))?;
    if seq_len != checkpoint.state.config.seq_len {
        bail!("vocabulary was written for length {seq_len}, checkpoint uses {}", checkpoint.state.config.seq_len);
    }
    let config = RunConfig::load(&dir.join(MANIFEST_FILE))?;
    let segment_hashtags = match checkpoint.extra_manifest.get("segment_hashtags").map(String::as_str) {
        Some("true") => true,
        Some("false") => false,
        other => bail!("checkpoint has no valid segment_hashtags entry ({other:?})"),
    };
    let model = TrainedModel::new(checkpoint.state.clone(), vocab, segment_hashtags)?;
    Ok(LoadedRun { model, config, checkpoint })
}

/// Scores a labeled file with a trained run. Resources come from the run's
/// manifest unless `resources_from` overrides them. Writes `eval.txt` and
/// `metrics.csv` into `out`.
pub fn cmd_eval(model_dir: &Path, data: &Path, group_by_dialect: bool, out: &Path, resources_from: Option<&RunConfig>) -> Result<GroupedReport> {
    let run = load_run(model_dir)?;
    let res_cfg = resources_from.unwrap_or(&run.config);
    res_cfg.check_paths()?;
    let resources = load_resources(res_cfg)?;
    let records = load_records(&[data.to_path_buf()])?;
    let report = run.model.evaluate(&records, &resources, group_by_dialect)?;
    fs::create_dir_all(out)?;
    write_text(&out.join("eval.txt"), &eval_table_text(&report, run.model.state.config.seed))?;
    write_text(&out.join("metrics.csv"), &metrics_csv(&report))?;
    Ok(report)
}

pub fn cmd_predict(model_dir: &Path, texts: &[String], resources_from: Option<&RunConfig>) -> Result<Vec<Prediction>> {
    let run = load_run(model_dir)?;
    let resources = load_resources(resources_from.unwrap_or(&run.config))?;
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    Ok(run.model.predict_texts(&refs, &resources)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationResult {
    pub without: AblationRow,
    pub with: AblationRow,
}

/// Two trainings that differ only in hashtag segmentation, run in parallel.
/// Each run's artifacts go to `without/` and `with/` under `cfg.out_dir`.
pub fn cmd_ablate(cfg: &RunConfig) -> Result<AblationResult> {
    cfg.check_paths()?;
    let resources = load_resources(cfg)?;
    let records = training_records(cfg)?;
    let variant = |segment: bool, sub: &str| RunConfig {
        out_dir: cfg.out_dir.join(sub),
        train: crate::traineval::TrainConfig { segment_hashtags: segment, ..cfg.train.clone() },
        ..cfg.clone()
    };
    let runs = [variant(false, "without"), variant(true, "with")];
    let outcomes: Vec<Result<TrainOutcome>> = std::thread::scope(|s| {
        let handles: Vec<_> = runs.iter().map(|r| s.spawn(|| train(&r.train, &records, &resources).map_err(anyhow::Error::from))).collect();
        handles.into_iter().map(|h| h.join().expect("training thread panicked")).collect()
    });
    let mut rows = Vec::new();
    for (run, outcome) in runs.iter().zip(outcomes) {
        let outcome = outcome?;
        save_run(&run.out_dir, run, &outcome)?;
        rows.push(AblationRow { train_accuracy: outcome.train_accuracy, val_accuracy: outcome.val_accuracy });
    }
    let result = AblationResult { without: rows[0], with: rows[1] };
    write_text(&cfg.out_dir.join("ablation.txt"), &ablation_text(result.without, result.with))?;
    write_text(&cfg.out_dir.join("ablation.csv"), &ablation_csv(result.without, result.with))?;
    Ok(result)
}
