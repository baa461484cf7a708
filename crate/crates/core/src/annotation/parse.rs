use std::sync::OnceLock;

use regex::Regex;

use super::{Gender, WordAnnotation};

/// Result of parsing one model response.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedAnalysis {
    pub annotations: Vec<WordAnnotation>,
    pub warnings: Vec<String>,
}

impl ParsedAnalysis {
    /// A non-empty response with no usable line.
    pub fn is_failure(&self) -> bool {
        self.annotations.is_empty() && !self.warnings.is_empty()
    }
}

fn line_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| {
        // Separator: "--", em dash, en dash or a single hyphen.
        Regex::new(r"^(?P<surface>.+?)\s*(?:--|\x{2014}|\x{2013}|-)\s*(?P<flag>[SsNn])\s*,\s*(?P<gender>[MmFf])$")
            .expect("valid regex")
    })
}

/// Parses `<surface> -- <S|N>, <M|F>` lines. Blank lines are ignored;
/// anything else that does not match becomes a warning.
pub fn parse_analysis(raw: &str) -> ParsedAnalysis {
    let mut out = ParsedAnalysis::default();
    for (i, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed = line_pattern().captures(line).and_then(|caps| {
            let person = caps["flag"].eq_ignore_ascii_case("s");
            let gender = if caps["gender"].eq_ignore_ascii_case("m") {
                Gender::Masculine
            } else {
                Gender::Feminine
            };
            WordAnnotation::new(caps["surface"].trim(), person, gender).ok()
        });
        match parsed {
            Some(a) => out.annotations.push(a),
            None => out
                .warnings
                .push(format!("line {}: unrecognized {:?}", i + 1, line)),
        }
    }
    out
}

/// Inverse of [`parse_analysis`] for well-formed annotation lists.
pub fn format_as_response(annotations: &[WordAnnotation]) -> String {
    annotations
        .iter()
        .map(WordAnnotation::to_line)
        .collect::<Vec<_>>()
        .join("\n")
}
