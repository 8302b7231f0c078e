use std::fmt;
use std::str::FromStr;

/// Sentiment classes with fixed output indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    P,
    N,
    Neu,
    None,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::P, Label::N, Label::Neu, Label::None];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Label> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::P => "P",
            Label::N => "N",
            Label::Neu => "NEU",
            Label::None => "NONE",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::ALL.into_iter().find(|l| l.as_str() == s).ok_or_else(|| s.to_string())
    }
}
