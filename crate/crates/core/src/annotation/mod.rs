//! LLM-based noun/pronoun annotation of Spanish sentences: prompt
//! assembly, response parsing and batch execution against a backend.

mod batch;
mod parse;
mod prompt;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use batch::{
    analyze_sentence, analyze_subset, AnalyzeOptions, BackendMeta, CorpusAnalysis, Progress,
    SentenceAnalysis, SentenceError, SentenceFailure,
};
pub use parse::{format_as_response, parse_analysis, ParsedAnalysis};
pub use prompt::{
    default_few_shot, default_template, render_prompt, FewShotExample, PromptTemplate,
    DEFAULT_TEMPLATE_TEXT, EXAMPLES_PLACEHOLDER, INSTRUCTIONS, SENTENCE_PLACEHOLDER,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnnotationError {
    #[error("annotation surface must be non-empty")]
    EmptySurface,
    #[error("annotation surface {0:?} contains a line break")]
    MultilineSurface(String),
    #[error("few-shot example {0:?} has no annotations")]
    EmptyExample(String),
    #[error("template must contain {placeholder} exactly once (found {count})")]
    Placeholder {
        placeholder: &'static str,
        count: usize,
    },
    #[error("sentence to analyze is empty")]
    EmptySentence,
}

/// Grammatical gender as emitted by the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    #[serde(rename = "M", alias = "m", alias = "Masculine", alias = "masculine")]
    Masculine,
    #[serde(rename = "F", alias = "f", alias = "Feminine", alias = "feminine")]
    Feminine,
}

impl Gender {
    pub fn letter(self) -> char {
        match self {
            Gender::Masculine => 'M',
            Gender::Feminine => 'F',
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// One noun or pronoun with its person flag and grammatical gender.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawAnnotation")]
pub struct WordAnnotation {
    pub surface: String,
    /// `true` when the word refers to a person (`S` in the prompt).
    pub person: bool,
    pub gender: Gender,
}

#[derive(Deserialize)]
struct RawAnnotation {
    surface: String,
    person: bool,
    gender: Gender,
}

impl TryFrom<RawAnnotation> for WordAnnotation {
    type Error = AnnotationError;

    fn try_from(raw: RawAnnotation) -> Result<Self, Self::Error> {
        WordAnnotation::new(raw.surface, raw.person, raw.gender)
    }
}

impl WordAnnotation {
    pub fn new(surface: impl Into<String>, person: bool, gender: Gender) -> Result<Self, AnnotationError> {
        let surface = surface.into();
        if surface.is_empty() {
            return Err(AnnotationError::EmptySurface);
        }
        if surface.contains(['\n', '\r']) {
            return Err(AnnotationError::MultilineSurface(surface));
        }
        Ok(WordAnnotation {
            surface,
            person,
            gender,
        })
    }

    /// The response-format line, e.g. `señor -- S, M`.
    pub fn to_line(&self) -> String {
        format!(
            "{} -- {}, {}",
            self.surface,
            if self.person { 'S' } else { 'N' },
            self.gender.letter()
        )
    }
}

impl fmt::Display for WordAnnotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}
