//! Tweet-level sentiment classification for Spanish dialects.
//!
//! [`textprep`] normalizes raw tweets, [`lexfeat`] computes lexicon and
//! punctuation features, [`encode`] maps tokens to fixed-length index
//! sequences, [`neural`] holds the hand-differentiated BiLSTM + attention
//! network, [`traineval`] trains and scores it, and [`cli`] wires everything
//! to files and commands.

pub mod cli;
pub mod dataset;
pub mod encode;
pub mod lexfeat;
pub mod neural;
pub mod textprep;
pub mod traineval;
