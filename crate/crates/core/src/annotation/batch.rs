use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::parse::parse_analysis;
use super::prompt::{render_prompt, PromptTemplate};
use super::{AnnotationError, WordAnnotation};
use crate::corpus::SampleSubset;
use crate::llm_backend::{BackendError, CompletionBackend, CompletionRequest, CostLedger};
use crate::polarity::Side;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendMeta {
    pub model_id: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub cache_hit: bool,
}

/// The parsed model output for one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceAnalysis {
    pub sentence_index: usize,
    pub annotations: Vec<WordAnnotation>,
    /// Model output exactly as received.
    pub raw_response: String,
    #[serde(rename = "warnings", default)]
    pub parse_warnings: Vec<String>,
    pub backend_meta: BackendMeta,
}

/// A sentence that produced no analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceFailure {
    pub sentence_index: usize,
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_response: Option<String>,
}

#[derive(Debug, Error)]
pub enum SentenceError {
    #[error(transparent)]
    Prompt(#[from] AnnotationError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("no parsable annotation lines in response ({} warning(s))", .warnings.len())]
    Unparsable {
        raw_response: String,
        warnings: Vec<String>,
    },
}

impl SentenceError {
    fn into_failure(self, sentence_index: usize) -> SentenceFailure {
        let raw_response = match &self {
            SentenceError::Unparsable { raw_response, .. } => Some(raw_response.clone()),
            _ => None,
        };
        SentenceFailure {
            sentence_index,
            error: self.to_string(),
            raw_response,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalyzeOptions {
    /// Upper bound on concurrent backend requests.
    pub max_in_flight: usize,
    /// Extra attempts when a response has no parsable line. Each re-ask is
    /// a distinct request, so it bypasses cached answers to the original.
    pub parse_retries: u32,
    /// Repetition number for repeated evaluations. Nonzero repetitions are
    /// sent as distinct requests so a cache does not collapse them.
    pub repetition: u32,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            max_in_flight: 1,
            parse_retries: 0,
            repetition: 0,
        }
    }
}

/// Renders the prompt, queries the backend and parses the answer.
pub fn analyze_sentence<B: CompletionBackend + ?Sized>(
    sentence_index: usize,
    sentence: &str,
    template: &PromptTemplate,
    backend: &B,
    options: &AnalyzeOptions,
) -> Result<SentenceAnalysis, SentenceError> {
    let prompt = render_prompt(template, sentence)?;
    let first_variant = options.repetition * (options.parse_retries + 1);
    let mut attempt = 0;
    loop {
        let completion = backend.complete(CompletionRequest {
            prompt: &prompt,
            variant: first_variant + attempt,
        })?;
        let parsed = parse_analysis(&completion.text);
        if parsed.is_failure() {
            if attempt < options.parse_retries {
                attempt += 1;
                continue;
            }
            return Err(SentenceError::Unparsable {
                raw_response: completion.text,
                warnings: parsed.warnings,
            });
        }
        return Ok(SentenceAnalysis {
            sentence_index,
            annotations: parsed.annotations,
            raw_response: completion.text,
            parse_warnings: parsed.warnings,
            backend_meta: BackendMeta {
                model_id: completion.model_id,
                input_tokens: completion.usage.input_tokens,
                output_tokens: completion.usage.output_tokens,
                cache_hit: completion.cache_hit,
            },
        });
    }
}

/// Per-sentence results for a whole subset, ordered by sentence index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusAnalysis {
    /// Fingerprint of the subset's source corpus, when known.
    pub subset_fingerprint: Option<String>,
    pub analyses: Vec<SentenceAnalysis>,
    pub failures: Vec<SentenceFailure>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Record {
    Analysis(SentenceAnalysis),
    Failure(SentenceFailure),
}

impl Record {
    fn index(&self) -> usize {
        match self {
            Record::Analysis(a) => a.sentence_index,
            Record::Failure(f) => f.sentence_index,
        }
    }
}

impl CorpusAnalysis {
    pub fn len(&self) -> usize {
        self.analyses.len() + self.failures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn annotation_count(&self) -> usize {
        self.analyses.iter().map(|a| a.annotations.len()).sum()
    }

    /// One JSON object per sentence in index order. Failures are written as
    /// `{sentence_index, error}` records.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut records: Vec<Record> = self
            .analyses
            .iter()
            .cloned()
            .map(Record::Analysis)
            .chain(self.failures.iter().cloned().map(Record::Failure))
            .collect();
        records.sort_by_key(Record::index);
        for r in records {
            serde_json::to_writer(&mut out, &r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> std::io::Result<Self> {
        let mut analysis = CorpusAnalysis::default();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(&line).map_err(|e| {
                std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1))
            })?;
            match record {
                Record::Analysis(a) => analysis.analyses.push(a),
                Record::Failure(f) => analysis.failures.push(f),
            }
        }
        analysis.analyses.sort_by_key(|a| a.sentence_index);
        analysis.failures.sort_by_key(|f| f.sentence_index);
        Ok(analysis)
    }

    pub fn read_file(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_jsonl(std::io::BufReader::new(file))
    }
}

/// Snapshot passed to the progress callback after every sentence.
#[derive(Debug, Clone, Copy)]
pub struct Progress {
    pub completed: usize,
    pub total: usize,
    pub failures: usize,
    pub ledger: CostLedger,
}

enum Outcome {
    Done(SentenceAnalysis),
    Failed(SentenceFailure),
}

/// Analyzes every pair of `subset` with up to `max_in_flight` concurrent
/// requests. Per-sentence problems become [`SentenceFailure`]s; only
/// configuration or authentication errors abort the run.
pub fn analyze_subset<B: CompletionBackend + ?Sized>(
    subset: &SampleSubset,
    side: Side,
    template: &PromptTemplate,
    backend: &B,
    options: &AnalyzeOptions,
    progress: Option<&(dyn Fn(Progress) + Sync)>,
) -> Result<CorpusAnalysis, BackendError> {
    if options.max_in_flight == 0 {
        return Err(BackendError::Config("max_in_flight must be at least 1".into()));
    }
    let total = subset.pairs.len();
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let fatal: Mutex<Option<BackendError>> = Mutex::new(None);
    let results: Mutex<Vec<Option<Outcome>>> = Mutex::new((0..total).map(|_| None).collect());
    let tally = Mutex::new((0usize, 0usize));

    let worker = || loop {
        if abort.load(Ordering::SeqCst) {
            return;
        }
        let slot = next.fetch_add(1, Ordering::SeqCst);
        if slot >= total {
            return;
        }
        let pair = &subset.pairs[slot];
        let text = match side {
            Side::Source => &pair.source_text,
            Side::Target => &pair.target_text,
        };
        let outcome = match analyze_sentence(pair.index, text, template, backend, options) {
            Ok(a) => Outcome::Done(a),
            Err(SentenceError::Backend(e)) if e.is_fatal() => {
                abort.store(true, Ordering::SeqCst);
                fatal.lock().expect("fatal lock").get_or_insert(e);
                return;
            }
            Err(e) => {
                log::warn!("sentence {}: {e}", pair.index);
                Outcome::Failed(e.into_failure(pair.index))
            }
        };
        let failed = matches!(outcome, Outcome::Failed(_));
        results.lock().expect("results lock")[slot] = Some(outcome);
        let mut t = tally.lock().expect("tally lock");
        t.0 += 1;
        t.1 += failed as usize;
        if let Some(report) = progress {
            report(Progress {
                completed: t.0,
                total,
                failures: t.1,
                ledger: backend.ledger().snapshot(),
            });
        }
    };

    let workers = options.max_in_flight.min(total.max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(worker);
        }
    });

    if let Some(err) = fatal.into_inner().expect("fatal lock") {
        return Err(err);
    }

    let mut analysis = CorpusAnalysis {
        subset_fingerprint: Some(subset.source_fingerprint.clone()),
        ..CorpusAnalysis::default()
    };
    for outcome in results.into_inner().expect("results lock") {
        match outcome.expect("every slot filled when no fatal error") {
            Outcome::Done(a) => analysis.analyses.push(a),
            Outcome::Failed(f) => analysis.failures.push(f),
        }
    }
    Ok(analysis)
}
