use std::collections::HashMap;
use std::ops::{Add, AddAssign};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{parse_analysis, CorpusAnalysis, WordAnnotation};

/// Correct (`n_c`), misclassified (`n_i`), missed (`n_m`) and extra
/// (`n_e`) word counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub n_c: u64,
    pub n_i: u64,
    pub n_m: u64,
    pub n_e: u64,
}

impl MatchCounts {
    pub fn gold_total(&self) -> u64 {
        self.n_c + self.n_i + self.n_m
    }

    pub fn predicted_total(&self) -> u64 {
        self.n_c + self.n_i + self.n_e
    }
}

impl Add for MatchCounts {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        MatchCounts {
            n_c: self.n_c + rhs.n_c,
            n_i: self.n_i + rhs.n_i,
            n_m: self.n_m + rhs.n_m,
            n_e: self.n_e + rhs.n_e,
        }
    }
}

impl AddAssign for MatchCounts {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

/// Matches one sentence's predictions against its gold list.
///
/// Surfaces compare case-insensitively. The first pass pairs items that
/// agree on surface, person flag and gender; the second pairs leftovers
/// that share only the surface. Unpaired gold items are misses, unpaired
/// predictions are extras.
pub fn match_annotations(predicted: &[WordAnnotation], gold: &[WordAnnotation]) -> MatchCounts {
    let key = |a: &WordAnnotation| a.surface.to_lowercase();
    let pred_keys: Vec<String> = predicted.iter().map(key).collect();
    let gold_keys: Vec<String> = gold.iter().map(key).collect();
    let mut pred_used = vec![false; predicted.len()];
    let mut gold_used = vec![false; gold.len()];
    let mut counts = MatchCounts::default();

    for (g, ga) in gold.iter().enumerate() {
        let hit = (0..predicted.len()).find(|&p| {
            !pred_used[p]
                && pred_keys[p] == gold_keys[g]
                && predicted[p].person == ga.person
                && predicted[p].gender == ga.gender
        });
        if let Some(p) = hit {
            pred_used[p] = true;
            gold_used[g] = true;
            counts.n_c += 1;
        }
    }

    for g in 0..gold.len() {
        if gold_used[g] {
            continue;
        }
        if let Some(p) = (0..predicted.len()).find(|&p| !pred_used[p] && pred_keys[p] == gold_keys[g]) {
            pred_used[p] = true;
            gold_used[g] = true;
            counts.n_i += 1;
        }
    }

    counts.n_m = gold_used.iter().filter(|u| !**u).count() as u64;
    counts.n_e = pred_used.iter().filter(|u| !**u).count() as u64;
    counts
}

/// Accuracy, precision, recall and F-score. `None` marks a score whose
/// denominator is zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationScores {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f_score: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den != 0).then(|| num as f64 / den as f64)
}

pub fn validation_scores(m: &MatchCounts) -> ValidationScores {
    let accuracy = ratio(m.n_c, m.n_c + m.n_i + m.n_m);
    let precision = ratio(m.n_c, m.n_c + m.n_i + m.n_e);
    let recall = ratio(m.n_c, m.n_c + m.n_m);
    let f_score = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    ValidationScores {
        accuracy,
        precision,
        recall,
        f_score,
    }
}

/// One manually annotated sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldSentence {
    pub sentence: String,
    pub annotations: Vec<WordAnnotation>,
}

/// Gold annotations; sentence `i` is compared with prediction index `i`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldSet {
    pub sentences: Vec<GoldSentence>,
}

#[derive(Debug, Error)]
pub enum GoldError {
    #[error("cannot read gold file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed gold JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("gold text line {line}: {message}")]
    Text { line: usize, message: String },
}

impl GoldSet {
    /// Parses the hand-editable text form: each sentence starts with a
    /// `Frase: ...` line followed by one `<surface> -- <S|N>, <M|F>` line per
    /// word. `Ejemplo k:` headers and blank lines are ignored.
    pub fn from_text(text: &str) -> Result<Self, GoldError> {
        let mut sentences: Vec<GoldSentence> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || (trimmed.starts_with("Ejemplo") && trimmed.ends_with(':')) {
                continue;
            }
            if let Some(sentence) = trimmed.strip_prefix("Frase:") {
                sentences.push(GoldSentence {
                    sentence: sentence.trim().to_string(),
                    annotations: Vec::new(),
                });
                continue;
            }
            let current = sentences.last_mut().ok_or_else(|| GoldError::Text {
                line: i + 1,
                message: "annotation before the first \"Frase:\" header".into(),
            })?;
            let parsed = parse_analysis(trimmed);
            match parsed.annotations.as_slice() {
                [a] => current.annotations.push(a.clone()),
                _ => {
                    return Err(GoldError::Text {
                        line: i + 1,
                        message: format!("not an annotation line: {trimmed:?}"),
                    })
                }
            }
        }
        Ok(GoldSet { sentences })
    }

    pub fn from_json(text: &str) -> Result<Self, GoldError> {
        Ok(serde_json::from_str(text)?)
    }

    /// JSON when the content starts with `{`, the text form otherwise.
    pub fn parse(text: &str) -> Result<Self, GoldError> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text)
        } else {
            Self::from_text(text)
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, GoldError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| GoldError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// How per-sentence matches are combined into scores.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreMode {
    /// Sum match counts over all sentences, then score once.
    #[default]
    Pooled,
    /// Score each sentence, then average the defined values.
    PerSentenceMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationOutcome {
    pub counts: MatchCounts,
    pub per_sentence: Vec<MatchCounts>,
    pub scores: ValidationScores,
}

/// Compares predictions with gold sentence by sentence. A gold sentence
/// without a successful prediction counts all its words as missed;
/// predictions for indices beyond the gold set are ignored.
pub fn validate(predictions: &CorpusAnalysis, gold: &GoldSet, mode: ScoreMode) -> ValidationOutcome {
    let by_index: HashMap<usize, &[WordAnnotation]> = predictions
        .analyses
        .iter()
        .map(|a| (a.sentence_index, a.annotations.as_slice()))
        .collect();
    let per_sentence: Vec<MatchCounts> = gold
        .sentences
        .iter()
        .enumerate()
        .map(|(i, g)| match_annotations(by_index.get(&i).copied().unwrap_or(&[]), &g.annotations))
        .collect();
    let counts = per_sentence.iter().copied().fold(MatchCounts::default(), Add::add);
    let scores = match mode {
        ScoreMode::Pooled => validation_scores(&counts),
        ScoreMode::PerSentenceMean => {
            let all: Vec<ValidationScores> = per_sentence.iter().map(validation_scores).collect();
            let mean = |f: fn(&ValidationScores) -> Option<f64>| {
                let defined: Vec<f64> = all.iter().filter_map(f).collect();
                (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
            };
            ValidationScores {
                accuracy: mean(|s| s.accuracy),
                precision: mean(|s| s.precision),
                recall: mean(|s| s.recall),
                f_score: mean(|s| s.f_score),
            }
        }
    };
    ValidationOutcome {
        counts,
        per_sentence,
        scores,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{BackendMeta, Gender, SentenceAnalysis};
    use Gender::{Feminine as F, Masculine as M};

    fn a(s: &str, p: bool, g: Gender) -> WordAnnotation {
        WordAnnotation::new(s, p, g).unwrap()
    }

    fn counts(n_c: u64, n_i: u64, n_m: u64, n_e: u64) -> MatchCounts {
        MatchCounts { n_c, n_i, n_m, n_e }
    }

    #[test]
    fn matching_examples() {
        assert_eq!(
            match_annotations(&[a("señor", true, M)], &[a("Señor", true, M)]),
            counts(1, 0, 0, 0)
        );
        assert_eq!(
            match_annotations(&[a("persona", true, M)], &[a("persona", true, F)]),
            counts(0, 1, 0, 0)
        );
        assert_eq!(
            match_annotations(
                &[a("casa", false, F), a("extra", false, M)],
                &[a("casa", false, F), a("perro", false, M)]
            ),
            counts(1, 0, 1, 1)
        );
    }

    #[test]
    fn exact_pass_runs_before_surface_pass() {
        // Surface-order greedy would pair gold[0] with pred[0] (mismatch)
        // and gold[1] with pred[1] (mismatch): n_c = 0.
        let pred = [a("miembro", true, F), a("miembro", true, M)];
        let gold = [a("miembro", true, M), a("miembro", false, F)];
        assert_eq!(match_annotations(&pred, &gold), counts(1, 1, 0, 0));
    }

    #[test]
    fn score_examples() {
        let s = validation_scores(&counts(9, 1, 0, 0));
        assert!((s.accuracy.unwrap() - 0.9).abs() < 1e-12);
        assert!((s.precision.unwrap() - 0.9).abs() < 1e-12);
        assert!((s.recall.unwrap() - 1.0).abs() < 1e-12);
        assert!((s.f_score.unwrap() - 18.0 / 19.0).abs() < 1e-12);

        let s = validation_scores(&counts(0, 0, 5, 0));
        assert_eq!(s.accuracy, Some(0.0));
        assert_eq!(s.precision, None);
        assert_eq!(s.recall, Some(0.0));
        assert_eq!(s.f_score, None);

        let s = validation_scores(&counts(10, 0, 0, 0));
        assert_eq!(
            (s.accuracy, s.precision, s.recall, s.f_score),
            (Some(1.0), Some(1.0), Some(1.0), Some(1.0))
        );
        assert_eq!(validation_scores(&MatchCounts::default()), ValidationScores::default());
    }

    #[test]
    fn gold_text_format() {
        let text = "Ejemplo 1:\nFrase: La doctora habló.\ndoctora -- S, F\n\nFrase: Nada.\n\nFrase: El perro.\nperro -- N, M\n";
        let g = GoldSet::parse(text).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.sentences[0].sentence, "La doctora habló.");
        assert_eq!(g.sentences[0].annotations, vec![a("doctora", true, F)]);
        assert!(g.sentences[1].annotations.is_empty());
        assert!(matches!(GoldSet::parse("perro -- N, M"), Err(GoldError::Text { line: 1, .. })));
        assert!(matches!(
            GoldSet::parse("Frase: x\nbasura"),
            Err(GoldError::Text { line: 2, .. })
        ));
    }

    #[test]
    fn gold_json_format() {
        let g = GoldSet::parse(
            r#"{"sentences": [{"sentence": "El perro.", "annotations": [{"surface": "perro", "person": false, "gender": "M"}]}]}"#,
        )
        .unwrap();
        assert_eq!(g.sentences[0].annotations, vec![a("perro", false, M)]);
    }

    fn prediction(index: usize, items: Vec<WordAnnotation>) -> SentenceAnalysis {
        SentenceAnalysis {
            sentence_index: index,
            annotations: items,
            raw_response: String::new(),
            parse_warnings: vec![],
            backend_meta: BackendMeta::default(),
        }
    }

    #[test]
    fn validate_pools_and_averages() {
        let gold = GoldSet {
            sentences: vec![
                GoldSentence {
                    sentence: "s0".into(),
                    annotations: vec![a("x", true, M), a("y", false, F)],
                },
                GoldSentence {
                    sentence: "s1".into(),
                    annotations: vec![a("z", true, F)],
                },
            ],
        };
        let preds = CorpusAnalysis {
            subset_fingerprint: None,
            analyses: vec![prediction(0, vec![a("X", true, M), a("y", false, F)])],
            failures: vec![],
        };
        let pooled = validate(&preds, &gold, ScoreMode::Pooled);
        assert_eq!(pooled.counts, counts(2, 0, 1, 0));
        assert!((pooled.scores.accuracy.unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let mean = validate(&preds, &gold, ScoreMode::PerSentenceMean);
        // sentence 0: A=1; sentence 1: A=0
        assert!((mean.scores.accuracy.unwrap() - 0.5).abs() < 1e-12);
        // sentence 1 has no predictions, so precision is undefined there
        assert!((mean.scores.precision.unwrap() - 1.0).abs() < 1e-12);
    }
}
