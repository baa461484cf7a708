#![allow(dead_code)]

use std::path::PathBuf;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

use genderscope::annotation::{BackendMeta, CorpusAnalysis, Gender, SentenceAnalysis, WordAnnotation};

/// Published epicene frequencies, all person-referencing.
pub const EPICENE_TABLE: [(&str, Gender, usize); 10] = [
    ("personas", Gender::Feminine, 149),
    ("miembros", Gender::Masculine, 63),
    ("gente", Gender::Feminine, 54),
    ("persona", Gender::Feminine, 34),
    ("miembro", Gender::Masculine, 20),
    ("víctimas", Gender::Feminine, 14),
    ("individuo", Gender::Masculine, 7),
    ("víctima", Gender::Feminine, 5),
    ("miembro", Gender::Feminine, 2),
    ("individuos", Gender::Masculine, 2),
];

pub fn sentence(index: usize, annotations: Vec<WordAnnotation>) -> SentenceAnalysis {
    SentenceAnalysis {
        sentence_index: index,
        annotations,
        raw_response: String::new(),
        parse_warnings: Vec::new(),
        backend_meta: BackendMeta::default(),
    }
}

/// One sentence per occurrence, each also carrying a non-epicene noun.
pub fn epicene_analysis() -> CorpusAnalysis {
    let mut analysis = CorpusAnalysis::default();
    for (surface, gender, freq) in EPICENE_TABLE {
        for _ in 0..freq {
            let index = analysis.analyses.len();
            analysis.analyses.push(sentence(
                index,
                vec![
                    WordAnnotation::new(surface, true, gender).unwrap(),
                    WordAnnotation::new("parlamento", false, Gender::Masculine).unwrap(),
                ],
            ));
        }
    }
    analysis
}
