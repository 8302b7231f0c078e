//! Flat `key=value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown and repeated
//! keys are errors. [`RunConfig::write`] emits every key, so a written file
//! reproduces the run exactly.

use std::collections::BTreeSet;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::lexfeat::N_FEATURES;
use crate::traineval::{Label, TrainConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("{key}: {reason}")]
    Invalid { key: String, reason: String },
    #[error("{key}: {path} does not exist")]
    MissingPath { key: String, path: PathBuf },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train_file: Option<PathBuf>,
    pub dev_file: Option<PathBuf>,
    pub lexicon_es: Option<PathBuf>,
    pub lexicon_en: Option<PathBuf>,
    pub bilingual_table: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Write measured seconds into the history CSV. Off by default so that
    /// reruns are byte-identical.
    pub record_wall_time: bool,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            train_file: None,
            dev_file: None,
            lexicon_es: None,
            lexicon_en: None,
            bilingual_table: None,
            out_dir: PathBuf::from("run"),
            record_wall_time: false,
            train: TrainConfig::default(),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::Invalid { key: key.into(), reason: format!("{value:?}: {e}") })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(ConfigError::Invalid { key: key.into(), reason: format!("{value:?} is not a boolean") }),
    }
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Parse { line: line_no, reason: format!("expected key=value, found {line:?}") });
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Parse { line: line_no, reason: format!("repeated key {key:?}") });
            }
            cfg.set(key, value).map_err(|e| match e {
                ConfigError::Invalid { key, reason } if reason == "unknown key" => {
                    ConfigError::Parse { line: line_no, reason: format!("unknown key {key:?}") }
                }
                other => other,
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let t = &mut self.train;
        match key {
            "train_file" => self.train_file = opt_path(value),
            "dev_file" => self.dev_file = opt_path(value),
            "lexicon_es" => self.lexicon_es = opt_path(value),
            "lexicon_en" => self.lexicon_en = opt_path(value),
            "bilingual_table" => self.bilingual_table = opt_path(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "record_wall_time" => self.record_wall_time = parse_bool(key, value)?,
            "seed" => t.seed = parse_value(key, value)?,
            "ratio" => t.ratio = parse_value(key, value)?,
            "batch_size" => t.batch_size = parse_value(key, value)?,
            "max_epochs" => t.max_epochs = parse_value(key, value)?,
            "lr" => t.lr = parse_value(key, value)?,
            "class_weighting" => t.class_weighting = parse_value(key, value)?,
            "segment_hashtags" => t.segment_hashtags = parse_bool(key, value)?,
            "early_stopping" => t.early_stopping = parse_bool(key, value)?,
            "seq_len" => t.seq_len = parse_value(key, value)?,
            "min_freq" => t.min_freq = parse_value(key, value)?,
            "max_vocab" => t.max_vocab = parse_value(key, value)?,
            "d_emb" => t.d_emb = parse_value(key, value)?,
            "h1" => t.h1 = parse_value(key, value)?,
            "h2" => t.h2 = parse_value(key, value)?,
            "dropout" => t.dropout = parse_value(key, value)?,
            "recurrent_dropout" => t.recurrent_dropout = parse_value(key, value)?,
            "l2_attn_w" => t.l2_attn_w = parse_value(key, value)?,
            "l2_attn_b" => t.l2_attn_b = parse_value(key, value)?,
            // Fixed by the feature extractor and the label set; accepted so
            // that every model field can be spelled out.
            "n_feat" => fixed(key, value, N_FEATURES)?,
            "n_classes" => fixed(key, value, Label::COUNT)?,
            _ => return Err(ConfigError::Invalid { key: key.into(), reason: "unknown key".into() }),
        }
        Ok(())
    }

    pub fn write(&self, mut out: impl Write) -> std::io::Result<()> {
        for (key, value) in self.entries() {
            writeln!(out, "{key}={value}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("config text is UTF-8")
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let t = &self.train;
        vec![
            ("train_file", path(&self.train_file)),
            ("dev_file", path(&self.dev_file)),
            ("lexicon_es", path(&self.lexicon_es)),
            ("lexicon_en", path(&self.lexicon_en)),
            ("bilingual_table", path(&self.bilingual_table)),
            ("out_dir", self.out_dir.display().to_string()),
            ("record_wall_time", self.record_wall_time.to_string()),
            ("seed", t.seed.to_string()),
            ("ratio", t.ratio.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("max_epochs", t.max_epochs.to_string()),
            ("lr", t.lr.to_string()),
            ("class_weighting", t.class_weighting.to_string()),
            ("segment_hashtags", t.segment_hashtags.to_string()),
            ("early_stopping", t.early_stopping.to_string()),
            ("seq_len", t.seq_len.to_string()),
            ("min_freq", t.min_freq.to_string()),
            ("max_vocab", t.max_vocab.to_string()),
            ("d_emb", t.d_emb.to_string()),
            ("h1", t.h1.to_string()),
            ("h2", t.h2.to_string()),
            ("n_feat", N_FEATURES.to_string()),
            ("n_classes", Label::COUNT.to_string()),
            ("dropout", t.dropout.to_string()),
            ("recurrent_dropout", t.recurrent_dropout.to_string()),
            ("l2_attn_w", t.l2_attn_w.to_string()),
            ("l2_attn_b", t.l2_attn_b.to_string()),
        ]
    }

    /// Every configured input path must exist.
    pub fn check_paths(&self) -> Result<(), ConfigError> {
        let paths = [
            ("train_file", &self.train_file),
            ("dev_file", &self.dev_file),
            ("lexicon_es", &self.lexicon_es),
            ("lexicon_en", &self.lexicon_en),
            ("bilingual_table", &self.bilingual_table),
        ];
        for (key, p) in paths {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(ConfigError::MissingPath { key: key.into(), path: p.clone() });
                }
            }
        }
        Ok(())
    }
}

fn fixed(key: &str, value: &str, expected: usize) -> Result<(), ConfigError> {
    let v: usize = parse_value(key, value)?;
    if v != expected {
        return Err(ConfigError::Invalid { key: key.into(), reason: format!("must be {expected}, got {v}") });
    }
    Ok(())
}
