//! Labeled tweet files.
//!
//! UTF-8 TSV with a required header `id<TAB>dialect<TAB>label<TAB>text`.
//! Unlabeled rows use `-` as the label. The text column is the rest of the
//! line and may itself contain tabs.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::traineval::Label;

pub const HEADER: &str = "id\tdialect\tlabel\ttext";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dialect {
    Cr,
    Es,
    Mx,
    Pe,
    Uy,
}

impl Dialect {
    pub const ALL: [Dialect; 5] = [Dialect::Cr, Dialect::Es, Dialect::Mx, Dialect::Pe, Dialect::Uy];

    pub fn as_str(self) -> &'static str {
        match self {
            Dialect::Cr => "CR",
            Dialect::Es => "ES",
            Dialect::Mx => "MX",
            Dialect::Pe => "PE",
            Dialect::Uy => "UY",
        }
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dialect {
    type Err = String;

    /// Accepts `UR` as an alias for Uruguay.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "CR" => Ok(Dialect::Cr),
            "ES" => Ok(Dialect::Es),
            "MX" => Ok(Dialect::Mx),
            "PE" => Ok(Dialect::Pe),
            "UY" | "UR" => Ok(Dialect::Uy),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TweetRecord {
    pub id: String,
    pub dialect: Dialect,
    pub text: String,
    pub label: Option<Label>,
}

impl TweetRecord {
    pub fn new(id: impl Into<String>, dialect: Dialect, text: impl Into<String>, label: Option<Label>) -> Self {
        Self { id: id.into(), dialect, text: text.into(), label }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetFile {
    pub records: Vec<TweetRecord>,
}

impl DatasetFile {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub fn load_dataset(path: &Path) -> Result<DatasetFile, DatasetError> {
    let file = std::fs::File::open(path)?;
    parse_dataset(std::io::BufReader::new(file))
}

pub fn parse_dataset(input: impl BufRead) -> Result<DatasetFile, DatasetError> {
    let lines: Vec<String> = input.lines().collect::<Result<_, _>>()?;
    let mut lines: Vec<&str> = lines.iter().map(|l| l.trim_end_matches('\r')).collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    match lines.first() {
        Some(&header) if header == HEADER => {}
        Some(other) => return Err(DatasetError::Parse { line: 1, reason: format!("expected header {HEADER:?}, found {other:?}") }),
        None => return Err(DatasetError::Parse { line: 1, reason: "missing header".into() }),
    }
    let mut seen = HashSet::new();
    let mut records = Vec::with_capacity(lines.len() - 1);
    for (i, line) in lines.iter().enumerate().skip(1) {
        let line_no = i + 1;
        let fields: Vec<&str> = line.splitn(4, '\t').collect();
        let [id, dialect, label, text] = fields[..] else {
            return Err(DatasetError::Parse { line: line_no, reason: format!("expected 4 tab-separated fields, found {}", fields.len()) });
        };
        if id.is_empty() {
            return Err(DatasetError::Parse { line: line_no, reason: "empty id".into() });
        }
        let dialect = dialect
            .parse::<Dialect>()
            .map_err(|d| DatasetError::Parse { line: line_no, reason: format!("unknown dialect {d:?}") })?;
        let label = match label {
            "-" => None,
            l => Some(l.parse::<Label>().map_err(|label| DatasetError::UnknownLabel { line: line_no, label })?),
        };
        if !seen.insert(id) {
            return Err(DatasetError::DuplicateId { line: line_no, id: id.to_string() });
        }
        records.push(TweetRecord::new(id, dialect, text, label));
    }
    if records.is_empty() {
        log::warn!("dataset has a header but no records");
    }
    Ok(DatasetFile { records })
}

/// Writes the format read by [`parse_dataset`]. Newlines inside a text are
/// replaced by spaces, since the format is line-based.
pub fn write_dataset(mut out: impl Write, data: &DatasetFile) -> std::io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for r in &data.records {
        let label = r.label.map_or("-", Label::as_str);
        let text = r.text.replace(['\n', '\r'], " ");
        writeln!(out, "{}\t{}\t{}\t{}", r.id, r.dialect, label, text)?;
    }
    Ok(())
}
