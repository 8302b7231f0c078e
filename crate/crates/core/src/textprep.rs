//! Tweet text normalization.
//!
//! The pipeline removes mentions and URLs, expands (or flattens) hashtags,
//! contracts whitespace, lowercases, and splits into tokens. Every step is a
//! pure function over `&str`.

use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

static MENTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").unwrap());
static URL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)(?:https?://|www\.)\S*").unwrap());
static HASHTAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"#[\p{L}\p{N}]+").unwrap());
static WHITESPACE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\s+").unwrap());

/// Characters trimmed from the front of a token after splitting.
const LEADING_TRIM: &[char] = &['¿', '¡', '#', '@'];
/// Sentence-terminal marks trimmed from the back of a token.
const TRAILING_TRIM: &[char] = &['?', '!', '.'];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TextError {
    #[error("malformed hashtag {0:?}: expected '#' followed by at least one character")]
    MalformedHashtag(String),
}

/// A tweet exactly as it was collected.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RawTweet {
    text: String,
}

impl RawTweet {
    pub fn new(text: impl Into<String>) -> Self {
        Self { text: text.into() }
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

impl From<&str> for RawTweet {
    fn from(text: &str) -> Self {
        Self::new(text)
    }
}

/// Ordered, non-empty, whitespace-free tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSequence {
    tokens: Vec<String>,
}

impl TokenSequence {
    /// Wraps tokens that are already known to satisfy the invariants.
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        debug_assert!(tokens.iter().all(|t| !t.is_empty() && !t.chars().any(char::is_whitespace)));
        Self { tokens }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    /// Space-joined form, suitable for feeding back through [`normalize`].
    pub fn join(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn into_inner(self) -> Vec<String> {
        self.tokens
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSequence {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self::from_tokens(iter.into_iter().map(Into::into).collect())
    }
}

pub fn strip_mentions(text: &str) -> String {
    MENTION.replace_all(text, "").into_owned()
}

pub fn strip_urls(text: &str) -> String {
    URL.replace_all(text, "").into_owned()
}

pub fn contract_whitespace(text: &str) -> String {
    WHITESPACE.replace_all(text, " ").trim_matches(' ').to_string()
}

/// Splits a PascalCase / camelCase / alphanumeric hashtag into words.
///
/// Boundaries are placed at lowercase→uppercase transitions, at letter↔digit
/// transitions, and before the last capital of an all-caps run that is followed
/// by a lowercase letter (`COVIDUpdate` → `COVID`, `Update`).
pub fn segment_hashtag(tag: &str) -> Result<TokenSequence, TextError> {
    let body = tag
        .strip_prefix('#')
        .filter(|b| !b.is_empty())
        .ok_or_else(|| TextError::MalformedHashtag(tag.to_string()))?;
    Ok(TokenSequence::from_tokens(split_case_boundaries(body)))
}

fn split_case_boundaries(body: &str) -> Vec<String> {
    let chars: Vec<char> = body.chars().collect();
    let mut words = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if i > 0 && is_boundary(chars[i - 1], c, chars.get(i + 1).copied()) {
            words.push(std::mem::take(&mut current));
        }
        current.push(c);
    }
    if !current.is_empty() {
        words.push(current);
    }
    words
}

fn is_boundary(prev: char, cur: char, next: Option<char>) -> bool {
    let lower_to_upper = prev.is_lowercase() && cur.is_uppercase();
    let letter_digit = (prev.is_alphabetic() && cur.is_numeric()) || (prev.is_numeric() && cur.is_alphabetic());
    let acronym_end = prev.is_uppercase() && cur.is_uppercase() && next.is_some_and(char::is_lowercase);
    lower_to_upper || letter_digit || acronym_end
}

fn expand_hashtags(text: &str, segment: bool) -> String {
    HASHTAG
        .replace_all(text, |caps: &regex::Captures<'_>| {
            let tag = &caps[0];
            if segment {
                // The regex guarantees a non-empty body.
                segment_hashtag(tag).map(|words| words.join()).unwrap_or_default()
            } else {
                tag[1..].to_string()
            }
        })
        .into_owned()
}

fn clean_token(token: &str) -> &str {
    token.trim_start_matches(LEADING_TRIM).trim_end_matches(TRAILING_TRIM)
}

/// Full normalization: mentions, URLs, hashtags, whitespace, case, split.
///
/// With `segment_hashtags` off the `#` is dropped and the body kept as one
/// word. Leading `¿ ¡ # @` and trailing `? ! .` are trimmed from tokens; the
/// punctuation counts are taken from the raw text, so nothing is lost.
pub fn normalize(raw: &RawTweet, segment_hashtags: bool) -> TokenSequence {
    let text = strip_mentions(raw.text());
    let text = strip_urls(&text);
    let text = expand_hashtags(&text, segment_hashtags);
    let text = contract_whitespace(&text).to_lowercase();
    text.split(' ')
        .map(clean_token)
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}
