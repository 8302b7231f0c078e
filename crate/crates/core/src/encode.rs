//! Vocabulary construction and fixed-length index encoding.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::textprep::TokenSequence;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
const RESERVED: usize = 2;

pub const DEFAULT_SEQ_LEN: usize = 50;
pub const DEFAULT_MIN_FREQ: usize = 1;
pub const DEFAULT_MAX_SIZE: usize = 20_000;

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("min_freq must be at least 1")]
    InvalidMinFreq,
    #[error("vocabulary file line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Token → index map. Index 0 is padding, 1 is the unknown token; real tokens
/// start at 2 and are contiguous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
}

impl Vocabulary {
    /// Ranks tokens by (frequency desc, token asc), keeps those with
    /// frequency ≥ `min_freq`, and truncates to `max_size` including the two
    /// reserved slots.
    pub fn build(corpus: &[TokenSequence], min_freq: usize, max_size: usize) -> Result<Self, EncodeError> {
        if corpus.is_empty() {
            return Err(EncodeError::EmptyCorpus);
        }
        if min_freq == 0 {
            return Err(EncodeError::InvalidMinFreq);
        }
        let mut freq: HashMap<&str, usize> = HashMap::new();
        for token in corpus.iter().flat_map(TokenSequence::iter) {
            *freq.entry(token).or_default() += 1;
        }
        let mut ranked: Vec<(&str, usize)> = freq.into_iter().filter(|&(_, n)| n >= min_freq).collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_size.saturating_sub(RESERVED));
        Ok(Self::from_ordered(ranked.into_iter().map(|(t, _)| t.to_string())))
    }

    fn from_ordered(tokens: impl IntoIterator<Item = String>) -> Self {
        let tokens: Vec<String> = tokens.into_iter().collect();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i + RESERVED)).collect();
        Self { index, tokens }
    }

    /// V, including PAD and UNK.
    pub fn size(&self) -> usize {
        self.tokens.len() + RESERVED
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        index.checked_sub(RESERVED).and_then(|i| self.tokens.get(i)).map(String::as_str)
    }

    /// Index-ordered regular tokens (PAD and UNK excluded).
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Maps to indices, right-truncates to `seq_len` and right-pads with PAD.
    pub fn encode(&self, tokens: &TokenSequence, seq_len: usize) -> EncodedTweet {
        assert!(seq_len >= 1, "sequence length must be at least 1");
        let mut indices: Vec<usize> = tokens
            .iter()
            .take(seq_len)
            .map(|t| self.index_of(t).unwrap_or(UNK))
            .collect();
        let true_length = indices.len();
        indices.resize(seq_len, PAD);
        EncodedTweet { indices, true_length }
    }

    /// Inverse of [`encode`](Self::encode) over the unpadded prefix; OOV
    /// positions come back as `None`.
    pub fn decode<'a>(&'a self, encoded: &EncodedTweet) -> Vec<Option<&'a str>> {
        encoded.indices[..encoded.true_length].iter().map(|&i| self.token(i)).collect()
    }

    /// Writes the header (`V<TAB>size`, `L<TAB>seq_len`) and one
    /// `token<TAB>index` line per regular token.
    pub fn write(&self, mut out: impl Write, seq_len: usize) -> std::io::Result<()> {
        writeln!(out, "V\t{}", self.size())?;
        writeln!(out, "L\t{seq_len}")?;
        for (i, token) in self.tokens.iter().enumerate() {
            writeln!(out, "{token}\t{}", i + RESERVED)?;
        }
        Ok(())
    }

    /// Reads the format produced by [`write`](Self::write), returning the
    /// vocabulary and the recorded sequence length.
    pub fn read(input: impl BufRead) -> Result<(Self, usize), EncodeError> {
        let mut lines = input.lines();
        let mut header = |key: &str, line: usize| -> Result<usize, EncodeError> {
            let text = lines.next().transpose()?.unwrap_or_default();
            text.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix('\t'))
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| EncodeError::Parse { line, reason: format!("expected header {key}<TAB>n") })
        };
        let size = header("V", 1)?;
        let seq_len = header("L", 2)?;
        let mut tokens = Vec::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 3;
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let parsed = line.split_once('\t').and_then(|(t, idx)| Some((t, idx.parse::<usize>().ok()?)));
            match parsed {
                Some((token, idx)) if idx == tokens.len() + RESERVED => tokens.push(token.to_string()),
                _ => {
                    return Err(EncodeError::Parse {
                        line: line_no,
                        reason: format!("expected token<TAB>{}", tokens.len() + RESERVED),
                    })
                }
            }
        }
        let vocab = Self::from_ordered(tokens);
        if vocab.size() != size || vocab.index.len() != vocab.tokens.len() {
            return Err(EncodeError::Parse { line: 1, reason: format!("header says V={size}, found {}", vocab.size()) });
        }
        Ok((vocab, seq_len))
    }
}

/// Exactly `L` indices; positions at or beyond `true_length` are PAD.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedTweet {
    pub indices: Vec<usize>,
    pub true_length: usize,
}
