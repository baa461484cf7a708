//! English unigram gender-polarity counting.

use std::collections::BTreeSet;
use std::ops::{Add, AddAssign};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SampleSubset;

const MALE_TOKENS: [&str; 9] = [
    "he", "him", "his", "himself", "man", "men", "he's", "boy", "boys",
];
const FEMALE_TOKENS: [&str; 9] = [
    "she", "she's", "her", "hers", "herself", "woman", "women", "girl", "girls",
];

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed lexicon: {0}")]
    Format(#[from] serde_json::Error),
    #[error("token {0:?} appears in both the male and female lists")]
    Overlap(String),
}

/// Male and female token sets, stored lowercase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenLexicon {
    #[serde(rename = "male")]
    pub male_tokens: BTreeSet<String>,
    #[serde(rename = "female")]
    pub female_tokens: BTreeSet<String>,
}

impl TokenLexicon {
    /// Builds a lexicon, lowercasing entries and rejecting overlaps.
    pub fn new<I, J, S, T>(male: I, female: J) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let norm = |s: &str| s.replace('\u{2019}', "'").to_lowercase();
        let male_tokens: BTreeSet<String> = male.into_iter().map(|s| norm(s.as_ref())).collect();
        let female_tokens: BTreeSet<String> =
            female.into_iter().map(|s| norm(s.as_ref())).collect();
        if let Some(shared) = male_tokens.intersection(&female_tokens).next() {
            return Err(LexiconError::Overlap(shared.clone()));
        }
        Ok(TokenLexicon {
            male_tokens,
            female_tokens,
        })
    }

    /// Loads `{"male": [...], "female": [...]}`.
    pub fn from_json(text: &str) -> Result<Self, LexiconError> {
        let raw: TokenLexicon = serde_json::from_str(text)?;
        TokenLexicon::new(raw.male_tokens, raw.female_tokens)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

impl Default for TokenLexicon {
    fn default() -> Self {
        default_lexicon()
    }
}

pub fn default_lexicon() -> TokenLexicon {
    TokenLexicon::new(MALE_TOKENS, FEMALE_TOKENS).expect("built-in lists are disjoint")
}

/// Male (`g_m`) and female (`g_f`) token occurrence counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderPolarityCounts {
    pub g_m: u64,
    pub g_f: u64,
}

impl Add for GenderPolarityCounts {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        GenderPolarityCounts {
            g_m: self.g_m + rhs.g_m,
            g_f: self.g_f + rhs.g_f,
        }
    }
}

impl AddAssign for GenderPolarityCounts {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for GenderPolarityCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

/// Lowercases, splits on whitespace and trims non-alphanumeric characters
/// from both ends of every token. Curly apostrophes become `'`, so
/// word-internal apostrophes survive ("He’s" → "he's").
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let stripped = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if stripped.is_empty() {
                None
            } else {
                Some(stripped.replace('\u{2019}', "'").to_lowercase())
            }
        })
        .collect()
}

/// Counts every occurrence of a lexicon token in `text`.
pub fn gender_polarity(text: &str, lexicon: &TokenLexicon) -> GenderPolarityCounts {
    let mut counts = GenderPolarityCounts::default();
    for token in tokenize(text) {
        if lexicon.male_tokens.contains(&token) {
            counts.g_m += 1;
        } else if lexicon.female_tokens.contains(&token) {
            counts.g_f += 1;
        }
    }
    counts
}

/// Which side of each sentence pair to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Target,
}

pub fn polarity_over_subset(
    subset: &SampleSubset,
    side: Side,
    lexicon: &TokenLexicon,
) -> GenderPolarityCounts {
    subset
        .pairs
        .iter()
        .map(|pair| {
            let text = match side {
                Side::Source => &pair.source_text,
                Side::Target => &pair.target_text,
            };
            gender_polarity(text, lexicon)
        })
        .sum()
}
