//! Hand-crafted lexicon and punctuation features.
//!
//! Ten values per tweet, in this fixed order: Spanish positive/negative/neutral
//! counts, English positive/negative/neutral counts (through a word-level
//! bilingual table), subjectivity, and the number of question marks,
//! exclamation marks and full stops in the raw text.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::textprep::{RawTweet, TokenSequence};

pub const N_FEATURES: usize = 10;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "es_pos",
    "es_neg",
    "es_neu",
    "en_pos",
    "en_neg",
    "en_neu",
    "subjectivity",
    "q_marks",
    "exclaims",
    "full_stops",
];

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: {reason}: {content:?}")]
    Parse { line: usize, content: String, reason: &'static str },
    #[error("unknown polarity {polarity:?} at line {line}")]
    UnknownPolarity { line: usize, polarity: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Pos,
    Neg,
    Neu,
}

impl FromStr for Polarity {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "POS" => Ok(Self::Pos),
            "NEG" => Ok(Self::Neg),
            "NEU" => Ok(Self::Neu),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Language {
    Es,
    En,
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::Es => "es",
            Language::En => "en",
        })
    }
}

/// Word → polarity map with lowercase, whitespace-free keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentimentLexicon {
    language: Language,
    entries: HashMap<String, Polarity>,
}

impl SentimentLexicon {
    pub fn empty(language: Language) -> Self {
        Self { language, entries: HashMap::new() }
    }

    pub fn from_pairs<'a>(language: Language, pairs: impl IntoIterator<Item = (&'a str, Polarity)>) -> Self {
        let entries = pairs.into_iter().map(|(w, p)| (w.to_lowercase(), p)).collect();
        Self { language, entries }
    }

    /// Parses `word<TAB>polarity` lines. `#` lines and blank lines are skipped;
    /// a repeated word keeps its last polarity.
    pub fn load(source: impl BufRead, language: Language) -> Result<Self, LexiconError> {
        let mut entries = HashMap::new();
        for (key, value, line) in tab_pairs(source)? {
            let polarity = value
                .parse::<Polarity>()
                .map_err(|_| LexiconError::UnknownPolarity { line, polarity: value.clone() })?;
            entries.insert(key, polarity);
        }
        Ok(Self { language, entries })
    }

    pub fn load_path(path: &Path, language: Language) -> Result<Self, LexiconError> {
        let file = std::fs::File::open(path)?;
        Self::load(std::io::BufReader::new(file), language)
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn get(&self, word: &str) -> Option<Polarity> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Static Spanish → English word table standing in for sentence translation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BilingualTable {
    entries: HashMap<String, String>,
}

impl BilingualTable {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let entries = pairs.into_iter().map(|(es, en)| (es.to_lowercase(), en.to_lowercase())).collect();
        Self { entries }
    }

    pub fn load(source: impl BufRead) -> Result<Self, LexiconError> {
        let mut entries = HashMap::new();
        for (es, en, line) in tab_pairs(source)? {
            if en.is_empty() || en.chars().any(char::is_whitespace) {
                return Err(LexiconError::Parse {
                    line,
                    content: en,
                    reason: "translation must be a single word",
                });
            }
            entries.insert(es, en.to_lowercase());
        }
        Ok(Self { entries })
    }

    pub fn load_path(path: &Path) -> Result<Self, LexiconError> {
        let file = std::fs::File::open(path)?;
        Self::load(std::io::BufReader::new(file))
    }

    pub fn translate(&self, word: &str) -> Option<&str> {
        self.entries.get(word).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Reads `key<TAB>value` lines, returning the lowercased key, raw value and
/// 1-based line number.
fn tab_pairs(source: impl BufRead) -> Result<Vec<(String, String, usize)>, LexiconError> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('\t') else {
            return Err(LexiconError::Parse {
                line: line_no,
                content: line.to_string(),
                reason: "expected word<TAB>value",
            });
        };
        if key.is_empty() || key.chars().any(char::is_whitespace) {
            return Err(LexiconError::Parse {
                line: line_no,
                content: line.to_string(),
                reason: "word must be non-empty and whitespace-free",
            });
        }
        out.push((key.to_lowercase(), value.trim().to_string(), line_no));
    }
    Ok(out)
}

/// Lexicons and translation table consumed by [`extract_features`].
#[derive(Debug, Clone)]
pub struct Resources {
    pub lex_es: SentimentLexicon,
    pub lex_en: SentimentLexicon,
    pub table: BilingualTable,
}

impl Default for Resources {
    fn default() -> Self {
        Self {
            lex_es: SentimentLexicon::empty(Language::Es),
            lex_en: SentimentLexicon::empty(Language::En),
            table: BilingualTable::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PolarityCounts {
    pub pos: u32,
    pub neg: u32,
    pub neu: u32,
}

impl PolarityCounts {
    fn add(&mut self, polarity: Polarity) {
        match polarity {
            Polarity::Pos => self.pos += 1,
            Polarity::Neg => self.neg += 1,
            Polarity::Neu => self.neu += 1,
        }
    }
}

pub fn polarity_counts(tokens: &TokenSequence, lex: &SentimentLexicon) -> PolarityCounts {
    let mut counts = PolarityCounts::default();
    for polarity in tokens.iter().filter_map(|t| lex.get(t)) {
        counts.add(polarity);
    }
    counts
}

pub fn english_polarity_counts(tokens: &TokenSequence, table: &BilingualTable, lex_en: &SentimentLexicon) -> PolarityCounts {
    let mut counts = PolarityCounts::default();
    for polarity in tokens.iter().filter_map(|t| table.translate(t)).filter_map(|w| lex_en.get(w)) {
        counts.add(polarity);
    }
    counts
}

/// Fraction of tokens with a POS or NEG Spanish polarity; 0 for no tokens.
pub fn subjectivity(tokens: &TokenSequence, lex_es: &SentimentLexicon) -> f64 {
    if tokens.is_empty() {
        return 0.0;
    }
    let polar = tokens
        .iter()
        .filter(|t| matches!(lex_es.get(t), Some(Polarity::Pos | Polarity::Neg)))
        .count();
    polar as f64 / tokens.len() as f64
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PunctuationCounts {
    pub q_marks: u32,
    pub exclaims: u32,
    pub full_stops: u32,
}

/// Counts on the raw text. `¿` and `¡` fold into question and exclamation marks.
pub fn punctuation_counts(raw: &RawTweet) -> PunctuationCounts {
    let mut counts = PunctuationCounts::default();
    for c in raw.text().chars() {
        match c {
            '?' | '¿' => counts.q_marks += 1,
            '!' | '¡' => counts.exclaims += 1,
            '.' => counts.full_stops += 1,
            _ => {}
        }
    }
    counts
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FeatureVector {
    pub es: PolarityCounts,
    pub en: PolarityCounts,
    pub subjectivity: f64,
    pub punctuation: PunctuationCounts,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; N_FEATURES] {
        [
            self.es.pos as f64,
            self.es.neg as f64,
            self.es.neu as f64,
            self.en.pos as f64,
            self.en.neg as f64,
            self.en.neu as f64,
            self.subjectivity,
            self.punctuation.q_marks as f64,
            self.punctuation.exclaims as f64,
            self.punctuation.full_stops as f64,
        ]
    }
}

pub fn extract_features(raw: &RawTweet, tokens: &TokenSequence, resources: &Resources) -> FeatureVector {
    FeatureVector {
        es: polarity_counts(tokens, &resources.lex_es),
        en: english_polarity_counts(tokens, &resources.table, &resources.lex_en),
        subjectivity: subjectivity(tokens, &resources.lex_es),
        punctuation: punctuation_counts(raw),
    }
}
