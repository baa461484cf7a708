//! Counting and scoring: the person/gender count table with its
//! male:female ratio, validation against gold annotations, and the
//! epicene breakdown.

mod epicene;
mod validation;

use serde::{Deserialize, Serialize};

use crate::annotation::{CorpusAnalysis, Gender, WordAnnotation};

pub use epicene::{
    default_epicene_lexicon, epicene_breakdown, load_epicene_lexicon, EpiceneBreakdown,
    EpiceneRow, EpiceneTotals,
};
pub use validation::{
    match_annotations, validate, validation_scores, GoldError, GoldSentence, GoldSet,
    MatchCounts, ScoreMode, ValidationOutcome, ValidationScores,
};

/// Annotation counts by person flag and gender, with the marginals.
///
/// Field names follow the table layout: `l_all_m` is L(*,M), `l_n_any` is
/// L(N,*) and so on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateCounts {
    pub l_all_m: u64,
    pub l_all_f: u64,
    pub l_n_any: u64,
    pub l_p_any: u64,
    pub l_p_m: u64,
    pub l_p_f: u64,
}

impl AggregateCounts {
    /// Builds the table from the four (person, gender) cells.
    pub fn from_cells(p_m: u64, p_f: u64, n_m: u64, n_f: u64) -> Self {
        AggregateCounts {
            l_all_m: p_m + n_m,
            l_all_f: p_f + n_f,
            l_n_any: n_m + n_f,
            l_p_any: p_m + p_f,
            l_p_m: p_m,
            l_p_f: p_f,
        }
    }

    pub fn add(&mut self, annotation: &WordAnnotation) {
        match (annotation.person, annotation.gender) {
            (true, Gender::Masculine) => {
                self.l_p_m += 1;
                self.l_p_any += 1;
                self.l_all_m += 1;
            }
            (true, Gender::Feminine) => {
                self.l_p_f += 1;
                self.l_p_any += 1;
                self.l_all_f += 1;
            }
            (false, Gender::Masculine) => {
                self.l_n_any += 1;
                self.l_all_m += 1;
            }
            (false, Gender::Feminine) => {
                self.l_n_any += 1;
                self.l_all_f += 1;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.l_all_m + self.l_all_f
    }

    /// Whether the marginals agree with each other. Always true for counts
    /// produced by [`aggregate`]; externally supplied rows may not be.
    pub fn is_consistent(&self) -> bool {
        self.l_p_m + self.l_p_f == self.l_p_any
            && self.l_n_any + self.l_p_any == self.l_all_m + self.l_all_f
            && self.l_p_m <= self.l_all_m
            && self.l_p_f <= self.l_all_f
    }

    pub fn bias_ratio(&self) -> BiasRatio {
        BiasRatio::new(self.l_p_m, self.l_p_f)
    }
}

pub fn aggregate(analysis: &CorpusAnalysis) -> AggregateCounts {
    let mut counts = AggregateCounts::default();
    for a in analysis.analyses.iter().flat_map(|s| &s.annotations) {
        counts.add(a);
    }
    counts
}

pub fn bias_ratio(counts: &AggregateCounts) -> BiasRatio {
    counts.bias_ratio()
}

/// A male:female ratio rendered as `X.XX : 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRatio {
    /// `male / female`; infinite or NaN when the denominator is zero.
    pub numerator: f64,
    pub denominator_is_zero: bool,
    pub display: String,
}

impl BiasRatio {
    /// `n/a` when both counts are zero, `inf : 1` when only the female
    /// count is. Rounding is half-up on the exact rational value.
    pub fn new(male: u64, female: u64) -> Self {
        if female == 0 {
            let display = if male == 0 { "n/a" } else { "inf : 1" };
            return BiasRatio {
                numerator: if male == 0 { f64::NAN } else { f64::INFINITY },
                denominator_is_zero: true,
                display: display.to_string(),
            };
        }
        let (m, f) = (male as u128, female as u128);
        let hundredths = (200 * m + f) / (2 * f);
        BiasRatio {
            numerator: male as f64 / female as f64,
            denominator_is_zero: false,
            display: format!("{}.{:02} : 1", hundredths / 100, hundredths % 100),
        }
    }
}

impl std::fmt::Display for BiasRatio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.display)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{BackendMeta, SentenceAnalysis};

    fn analysis(items: &[(&str, bool, Gender)]) -> CorpusAnalysis {
        CorpusAnalysis {
            subset_fingerprint: None,
            analyses: vec![SentenceAnalysis {
                sentence_index: 0,
                annotations: items
                    .iter()
                    .map(|&(s, p, g)| WordAnnotation::new(s, p, g).unwrap())
                    .collect(),
                raw_response: String::new(),
                parse_warnings: vec![],
                backend_meta: BackendMeta::default(),
            }],
            failures: vec![],
        }
    }

    #[test]
    fn aggregate_two_items() {
        let c = aggregate(&analysis(&[
            ("señor", true, Gender::Masculine),
            ("mañana", false, Gender::Feminine),
        ]));
        assert_eq!(c.l_p_m, 1);
        assert_eq!(c.l_p_f, 0);
        assert_eq!(c.l_n_any, 1);
        assert_eq!(c.l_all_m, 1);
        assert_eq!(c.l_all_f, 1);
        assert!(c.is_consistent());
        assert_eq!(aggregate(&CorpusAnalysis::default()), AggregateCounts::default());
    }

    #[test]
    fn published_row_marginals_do_not_close() {
        // 3531 + 3131 = 6662 but 5989 + 677 = 6666
        let row = AggregateCounts {
            l_all_m: 3531,
            l_all_f: 3131,
            l_n_any: 5989,
            l_p_any: 677,
            l_p_m: 541,
            l_p_f: 136,
        };
        assert!(!row.is_consistent());
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(BiasRatio::new(541, 136).display, "3.98 : 1");
        assert_eq!(BiasRatio::new(797, 132).display, "6.04 : 1");
        assert_eq!(BiasRatio::new(0, 5).display, "0.00 : 1");
        let inf = BiasRatio::new(7, 0);
        assert_eq!(inf.display, "inf : 1");
        assert!(inf.denominator_is_zero);
        assert_eq!(BiasRatio::new(0, 0).display, "n/a");
        assert_eq!(BiasRatio::new(32, 23).display, "1.39 : 1");
    }

    #[test]
    fn ratio_rounds_half_up() {
        // 1/8 = 0.125 exactly
        assert_eq!(BiasRatio::new(1, 8).display, "0.13 : 1");
        assert_eq!(BiasRatio::new(201, 200).display, "1.01 : 1");
        assert_eq!(BiasRatio::new(3, 1).display, "3.00 : 1");
    }

    proptest::proptest! {
        #[test]
        fn ratio_display_matches_float_rounding(m in 0u64..100_000, f in 1u64..100_000) {
            let shown: f64 = BiasRatio::new(m, f).display.trim_end_matches(" : 1").parse().unwrap();
            let exact = m as f64 / f as f64;
            proptest::prop_assert!((shown - exact).abs() <= 0.005 + 1e-9);
        }
    }
}
