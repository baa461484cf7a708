//! Result tables as aligned text, CSV or JSON.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::metrics::{AggregateCounts, BiasRatio, EpiceneBreakdown, ValidationScores};
use crate::polarity::GenderPolarityCounts;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Csv,
    Json,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("a report needs at least one row")]
    Empty,
    #[error("model {0:?} has no runs")]
    NoRuns(String),
    #[error("dataset label must be non-empty")]
    EmptyLabel,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolarityRow {
    pub dataset: String,
    pub counts: GenderPolarityCounts,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LlmRow {
    pub dataset: String,
    pub counts: AggregateCounts,
}

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
    footnotes: Vec<String>,
}

impl Table {
    fn new(headers: &[&str]) -> Self {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
            footnotes: Vec::new(),
        }
    }

    fn text(&self) -> String {
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|c| {
                self.rows
                    .iter()
                    .map(|r| r[c].chars().count())
                    .chain([self.headers[c].chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            cells
                .iter()
                .enumerate()
                .map(|(c, cell)| {
                    let pad = widths[c] - cell.chars().count();
                    if c == 0 {
                        format!("{cell}{}", " ".repeat(pad))
                    } else {
                        format!("{}{cell}", " ".repeat(pad))
                    }
                })
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = line(&self.headers);
        out.push('\n');
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        for f in &self.footnotes {
            out.push_str(f);
            out.push('\n');
        }
        out
    }

    fn csv(&self) -> Result<String, ReportError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| ReportError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv of UTF-8 strings"))
    }
}

fn render(table: &Table, format: Format, json_doc: impl FnOnce() -> Value) -> Result<String, ReportError> {
    match format {
        Format::Text => Ok(table.text()),
        Format::Csv => table.csv(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&json_doc()).expect("json value serializes");
            s.push('\n');
            Ok(s)
        }
    }
}

fn check_label(label: &str) -> Result<(), ReportError> {
    if label.trim().is_empty() {
        Err(ReportError::EmptyLabel)
    } else {
        Ok(())
    }
}

/// Dataset, G_M, G_F, G_M:G_F.
pub fn emit_polarity_table(rows: &[PolarityRow], format: Format) -> Result<String, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut table = Table::new(&["Dataset", "G_M", "G_F", "G_M:G_F"]);
    let mut docs = Vec::new();
    for r in rows {
        check_label(&r.dataset)?;
        let ratio = BiasRatio::new(r.counts.g_m, r.counts.g_f).display;
        table.rows.push(vec![
            r.dataset.clone(),
            r.counts.g_m.to_string(),
            r.counts.g_f.to_string(),
            ratio.clone(),
        ]);
        docs.push(json!({
            "dataset": r.dataset,
            "g_m": r.counts.g_m,
            "g_f": r.counts.g_f,
            "ratio": ratio,
        }));
    }
    render(&table, format, || Value::Array(docs))
}

/// Dataset, L_{*,M}, L_{*,F}, L_{N,*}, L_{P,*}, L_{P,M}, L_{P,F} and the
/// L_{P,M}:L_{P,F} ratio.
pub fn emit_llm_table(rows: &[LlmRow], format: Format) -> Result<String, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut table = Table::new(&[
        "Dataset",
        "L_{*,M}",
        "L_{*,F}",
        "L_{N,*}",
        "L_{P,*}",
        "L_{P,M}",
        "L_{P,F}",
        "L_{P,M}:L_{P,F}",
    ]);
    let mut docs = Vec::new();
    for r in rows {
        check_label(&r.dataset)?;
        let c = &r.counts;
        let ratio = c.bias_ratio().display;
        table.rows.push(vec![
            r.dataset.clone(),
            c.l_all_m.to_string(),
            c.l_all_f.to_string(),
            c.l_n_any.to_string(),
            c.l_p_any.to_string(),
            c.l_p_m.to_string(),
            c.l_p_f.to_string(),
            ratio.clone(),
        ]);
        docs.push(json!({
            "dataset": r.dataset,
            "l_all_m": c.l_all_m,
            "l_all_f": c.l_all_f,
            "l_n_any": c.l_n_any,
            "l_p_any": c.l_p_any,
            "l_p_m": c.l_p_m,
            "l_p_f": c.l_p_f,
            "ratio": ratio,
        }));
    }
    render(&table, format, || Value::Array(docs))
}

/// Mean and sample standard deviation of the defined values, in percent.
/// The standard deviation is 0 for a single value.
fn mean_sd_percent(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some((mean * 100.0, sd * 100.0))
}

fn two_dp(x: f64) -> String {
    format!("{x:.2}")
}

/// One row per model: mean ± sample SD of accuracy, precision, recall and
/// F-score over the runs, as percentages. Models with a single run are
/// flagged with `*` and a footnote.
pub fn emit_validation_table(
    per_model_runs: &[(String, Vec<ValidationScores>)],
    format: Format,
) -> Result<String, ReportError> {
    if per_model_runs.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut table = Table::new(&[
        "Model",
        "Runs",
        "Accuracy (%)",
        "Precision (%)",
        "Recall (%)",
        "F-score (%)",
    ]);
    let mut docs = Vec::new();
    let mut any_single = false;
    let metrics: [(&str, fn(&ValidationScores) -> Option<f64>); 4] = [
        ("accuracy", |s| s.accuracy),
        ("precision", |s| s.precision),
        ("recall", |s| s.recall),
        ("f_score", |s| s.f_score),
    ];
    for (model, runs) in per_model_runs {
        check_label(model)?;
        if runs.is_empty() {
            return Err(ReportError::NoRuns(model.clone()));
        }
        let single = runs.len() == 1;
        any_single |= single;
        let mut cells = vec![
            if single { format!("{model}*") } else { model.clone() },
            runs.len().to_string(),
        ];
        let mut doc = serde_json::Map::new();
        doc.insert("model".into(), json!(model));
        doc.insert("runs".into(), json!(runs.len()));
        doc.insert("single_run".into(), json!(single));
        for (name, get) in metrics {
            let values: Vec<f64> = runs.iter().filter_map(get).collect();
            match mean_sd_percent(&values) {
                Some((mean, sd)) => {
                    let (m, s) = (two_dp(mean), two_dp(sd));
                    cells.push(format!("{m} ± {s}"));
                    doc.insert(
                        name.into(),
                        json!({
                            "mean": m.parse::<f64>().expect("formatted float"),
                            "sd": s.parse::<f64>().expect("formatted float"),
                        }),
                    );
                }
                None => {
                    cells.push("n/a".into());
                    doc.insert(name.into(), Value::Null);
                }
            }
        }
        table.rows.push(cells);
        docs.push(Value::Object(doc));
    }
    if any_single {
        table
            .footnotes
            .push("* single run: standard deviation reported as 0.00".into());
    }
    render(&table, format, || Value::Array(docs))
}

/// Word, p, g, Frequency, followed by the feminine/masculine totals.
pub fn emit_epicene_table(breakdown: &EpiceneBreakdown, format: Format) -> Result<String, ReportError> {
    let mut table = Table::new(&["Word", "p", "g", "Frequency"]);
    for r in &breakdown.rows {
        table.rows.push(vec![
            r.surface.clone(),
            if r.person { "P" } else { "N" }.to_string(),
            r.gender.letter().to_string(),
            r.frequency.to_string(),
        ]);
    }
    let t = &breakdown.totals;
    let share = t.feminine_share.map(|s| two_dp(s * 100.0));
    let share_text = share.as_ref().map(|s| format!("{s}%")).unwrap_or_else(|| "n/a".into());
    match format {
        Format::Text => {
            table.footnotes.push(format!(
                "person-referencing: feminine {}, masculine {}, feminine share {}",
                t.feminine_count, t.masculine_count, share_text
            ));
            Ok(table.text())
        }
        Format::Csv => {
            table.rows.push(vec![
                "TOTAL feminine".into(),
                "P".into(),
                "F".into(),
                t.feminine_count.to_string(),
            ]);
            table.rows.push(vec![
                "TOTAL masculine".into(),
                "P".into(),
                "M".into(),
                t.masculine_count.to_string(),
            ]);
            table.csv()
        }
        Format::Json => {
            let doc = json!({
                "rows": breakdown.rows.iter().map(|r| json!({
                    "surface": r.surface,
                    "person": r.person,
                    "gender": r.gender.letter().to_string(),
                    "frequency": r.frequency,
                })).collect::<Vec<_>>(),
                "totals": {
                    "feminine_count": t.feminine_count,
                    "masculine_count": t.masculine_count,
                    "feminine_share_percent": share.map(|s| s.parse::<f64>().expect("formatted float")),
                },
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("json value serializes");
            s.push('\n');
            Ok(s)
        }
    }
}
