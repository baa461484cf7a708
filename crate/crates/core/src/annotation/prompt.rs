use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AnnotationError, Gender, WordAnnotation};

pub const EXAMPLES_PLACEHOLDER: &str = "<EXAMPLES>";
pub const SENTENCE_PLACEHOLDER: &str = "<SENTENCE>";

macro_rules! instructions {
    () => {
        "Instrucciones: Identifica todos los sustantivos y pronombres en la frase proporcionada. Para cada uno, determina si se refiere a un ser humano (S) o no (N), y especifica su género gramatical: masculino (M) o femenino (F). Excluye los apellidos. Sigue el formato de los ejemplos proporcionados sin añadir texto adicional."
    };
}

pub const INSTRUCTIONS: &str = instructions!();

pub const DEFAULT_TEMPLATE_TEXT: &str = concat!("<EXAMPLES>\nFrase: <SENTENCE>\n", instructions!());

/// A sentence with its reference analysis, used to prime the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawExample")]
pub struct FewShotExample {
    pub sentence: String,
    pub annotations: Vec<WordAnnotation>,
}

#[derive(Deserialize)]
struct RawExample {
    sentence: String,
    annotations: Vec<WordAnnotation>,
}

impl TryFrom<RawExample> for FewShotExample {
    type Error = AnnotationError;

    fn try_from(raw: RawExample) -> Result<Self, Self::Error> {
        FewShotExample::new(raw.sentence, raw.annotations)
    }
}

impl FewShotExample {
    pub fn new(sentence: impl Into<String>, annotations: Vec<WordAnnotation>) -> Result<Self, AnnotationError> {
        let sentence = sentence.into();
        if annotations.is_empty() {
            return Err(AnnotationError::EmptyExample(sentence));
        }
        Ok(FewShotExample {
            sentence,
            annotations,
        })
    }

    /// `Ejemplo k:` header, the sentence, then one line per annotation.
    fn render(&self, number: usize) -> String {
        let mut out = format!("Ejemplo {number}:\nFrase: {}\n", self.sentence);
        for a in &self.annotations {
            out.push_str(&a.to_line());
            out.push('\n');
        }
        out
    }
}

/// Prompt text with `<EXAMPLES>` and `<SENTENCE>` placeholders plus the
/// examples that fill the first one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTemplate")]
pub struct PromptTemplate {
    template_text: String,
    examples: Vec<FewShotExample>,
}

#[derive(Deserialize)]
struct RawTemplate {
    #[serde(default = "default_template_text")]
    template_text: String,
    #[serde(default = "default_few_shot")]
    examples: Vec<FewShotExample>,
}

fn default_template_text() -> String {
    DEFAULT_TEMPLATE_TEXT.to_string()
}

impl TryFrom<RawTemplate> for PromptTemplate {
    type Error = AnnotationError;

    fn try_from(raw: RawTemplate) -> Result<Self, Self::Error> {
        PromptTemplate::new(raw.template_text, raw.examples)
    }
}

impl PromptTemplate {
    pub fn new(template_text: impl Into<String>, examples: Vec<FewShotExample>) -> Result<Self, AnnotationError> {
        let template_text = template_text.into();
        for placeholder in [EXAMPLES_PLACEHOLDER, SENTENCE_PLACEHOLDER] {
            let count = template_text.matches(placeholder).count();
            if count != 1 {
                return Err(AnnotationError::Placeholder { placeholder, count });
            }
        }
        Ok(PromptTemplate {
            template_text,
            examples,
        })
    }

    /// Loads `{template_text, examples}`; either key may be omitted to use
    /// the built-in default.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn from_file(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn template_text(&self) -> &str {
        &self.template_text
    }

    pub fn examples(&self) -> &[FewShotExample] {
        &self.examples
    }

    /// Same template with a different example list (e.g. zero-shot).
    pub fn with_examples(&self, examples: Vec<FewShotExample>) -> Self {
        PromptTemplate {
            template_text: self.template_text.clone(),
            examples,
        }
    }

    fn examples_block(&self) -> String {
        self.examples
            .iter()
            .enumerate()
            .map(|(i, ex)| ex.render(i + 1))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        default_template()
    }
}

pub fn default_template() -> PromptTemplate {
    PromptTemplate::new(DEFAULT_TEMPLATE_TEXT, default_few_shot()).expect("default template is valid")
}

/// Fills both placeholders. Substitution is positional, so placeholder-like
/// text inside examples or the sentence is left alone.
pub fn render_prompt(template: &PromptTemplate, sentence: &str) -> Result<String, AnnotationError> {
    if sentence.trim().is_empty() {
        return Err(AnnotationError::EmptySentence);
    }
    let text = &template.template_text;
    let ex = text.find(EXAMPLES_PLACEHOLDER).expect("validated");
    let se = text.find(SENTENCE_PLACEHOLDER).expect("validated");
    let examples = template.examples_block();
    let mut parts = [
        (ex, EXAMPLES_PLACEHOLDER.len(), examples.as_str()),
        (se, SENTENCE_PLACEHOLDER.len(), sentence),
    ];
    parts.sort_by_key(|p| p.0);

    let mut out = String::with_capacity(text.len() + examples.len() + sentence.len());
    let mut cursor = 0;
    for (pos, len, replacement) in parts {
        out.push_str(&text[cursor..pos]);
        out.push_str(replacement);
        cursor = pos + len;
    }
    out.push_str(&text[cursor..]);
    Ok(out)
}

fn ex(sentence: &str, lines: &[(&str, bool, Gender)]) -> FewShotExample {
    let annotations = lines
        .iter()
        .map(|&(s, p, g)| WordAnnotation::new(s, p, g).expect("static annotation"))
        .collect();
    FewShotExample::new(sentence, annotations).expect("static example")
}

/// The five reference sentence/analysis pairs shipped as defaults.
pub fn default_few_shot() -> Vec<FewShotExample> {
    use Gender::{Feminine as F, Masculine as M};
    const S: bool = true;
    const N: bool = false;
    vec![
        ex(
            "El señor Presidente viajó a Tokio para reunirse con el secretario de estado y a la mañana siguiente tuvo que volar a Madrid por temas personales.",
            &[
                ("señor", S, M),
                ("Presidente", S, M),
                ("Tokio", N, M),
                ("secretario", S, M),
                ("estado", N, M),
                ("mañana", N, F),
                ("Madrid", N, M),
                ("temas", N, M),
            ],
        ),
        ex(
            "Mi colega Sr. Allan Hofmann se dirigió a los ciudadanos de Madrid, recordándoles que son personas con derechos y responsabilidades.",
            &[
                ("colega", S, M),
                ("Sr.", S, M),
                ("Allan", S, M),
                ("ciudadanos", S, M),
                ("Madrid", N, M),
                ("personas", S, F),
                ("derechos", N, M),
                ("responsabilidades", N, F),
            ],
        ),
        ex(
            "El señor Presidente de la comisión de educación se reunió con los estudiantes en Tokio, donde el distinguido Sir Ben Smith compartió su visión sobre el futuro de la enseñanza.",
            &[
                ("señor", S, M),
                ("Presidente", S, M),
                ("comisión", N, F),
                ("educación", N, F),
                ("estudiantes", S, M),
                ("Tokio", N, M),
                ("Sir", S, M),
                ("Ben", S, M),
                ("visión", N, F),
                ("futuro", N, M),
                ("enseñanza", N, F),
            ],
        ),
        ex(
            "El Sr. Johnson, un respetado colega de la ciudadanía británica, ha vivido en Londres durante más de dos décadas, donde trabaja incansablemente para mejorar la comunidad local.",
            &[
                ("Sr.", S, M),
                ("colega", S, M),
                ("ciudadanía", N, F),
                ("Londres", N, M),
                ("décadas", N, F),
                ("comunidad", N, F),
            ],
        ),
        ex(
            "Encontré en Europa no solo destinos turísticos, sino un hogar temporal donde me sentí ciudadana del mundo, abrazando la diversidad y la riqueza cultural que esta tierra ofrece.",
            &[
                ("Europa", N, F),
                ("destinos", N, M),
                ("hogar", N, M),
                ("ciudadana", S, F),
                ("mundo", N, M),
                ("diversidad", N, F),
                ("riqueza", N, F),
                ("tierra", N, F),
            ],
        ),
    ]
}
