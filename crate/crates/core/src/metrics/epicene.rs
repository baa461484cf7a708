use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotation::{CorpusAnalysis, Gender};

const DEFAULT_EPICENES: [&str; 9] = [
    "personas",
    "miembros",
    "gente",
    "persona",
    "miembro",
    "víctimas",
    "individuo",
    "víctima",
    "individuos",
];

pub fn default_epicene_lexicon() -> BTreeSet<String> {
    DEFAULT_EPICENES.iter().map(|s| s.to_string()).collect()
}

/// Reads one surface per line; blank lines and `#` comments are skipped.
pub fn load_epicene_lexicon(path: impl AsRef<Path>) -> std::io::Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpiceneRow {
    pub surface: String,
    pub person: bool,
    pub gender: Gender,
    pub frequency: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EpiceneTotals {
    pub feminine_count: u64,
    pub masculine_count: u64,
    /// `None` when no person-referencing epicene was found.
    pub feminine_share: Option<f64>,
}

impl EpiceneTotals {
    pub fn new(feminine_count: u64, masculine_count: u64) -> Self {
        let total = feminine_count + masculine_count;
        EpiceneTotals {
            feminine_count,
            masculine_count,
            feminine_share: (total > 0).then(|| feminine_count as f64 / total as f64),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpiceneBreakdown {
    pub rows: Vec<EpiceneRow>,
    pub totals: EpiceneTotals,
}

impl EpiceneBreakdown {
    /// Sorts rows by descending frequency and recomputes the totals over
    /// person-referencing rows.
    pub fn from_rows(mut rows: Vec<EpiceneRow>) -> Self {
        rows.sort_by(|a, b| {
            b.frequency
                .cmp(&a.frequency)
                .then_with(|| a.surface.cmp(&b.surface))
                .then_with(|| b.person.cmp(&a.person))
                .then_with(|| a.gender.cmp(&b.gender))
        });
        let (mut fem, mut masc) = (0, 0);
        for r in rows.iter().filter(|r| r.person) {
            match r.gender {
                Gender::Feminine => fem += r.frequency,
                Gender::Masculine => masc += r.frequency,
            }
        }
        EpiceneBreakdown {
            rows,
            totals: EpiceneTotals::new(fem, masc),
        }
    }
}

/// Counts annotations whose lowercased surface is in `lexicon`, keyed by
/// (surface, person, gender).
pub fn epicene_breakdown(analysis: &CorpusAnalysis, lexicon: &BTreeSet<String>) -> EpiceneBreakdown {
    let mut freq: BTreeMap<(String, bool, Gender), u64> = BTreeMap::new();
    for a in analysis.analyses.iter().flat_map(|s| &s.annotations) {
        let surface = a.surface.to_lowercase();
        if lexicon.contains(&surface) {
            *freq.entry((surface, a.person, a.gender)).or_default() += 1;
        }
    }
    EpiceneBreakdown::from_rows(
        freq.into_iter()
            .map(|((surface, person, gender), frequency)| EpiceneRow {
                surface,
                person,
                gender,
                frequency,
            })
            .collect(),
    )
}
