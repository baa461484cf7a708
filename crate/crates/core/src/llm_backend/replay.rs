use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    prompt_key, BackendError, Completion, CompletionBackend, CompletionRequest, Ledger,
    TokenUsage,
};

/// One line of a replay fixture file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayRecord {
    /// [`prompt_key`] of the prompt this record answers.
    pub key: String,
    pub response_text: String,
}

/// Answers prompts from a fixed table keyed by prompt hash. Never touches
/// the network; an unknown prompt is a [`BackendError::FixtureMissing`].
#[derive(Debug)]
pub struct ReplayBackend {
    model_id: String,
    responses: HashMap<String, String>,
    ledger: Arc<Ledger>,
}

impl ReplayBackend {
    pub fn new(records: impl IntoIterator<Item = ReplayRecord>) -> Self {
        ReplayBackend {
            model_id: "replay".to_string(),
            responses: records
                .into_iter()
                .map(|r| (r.key, r.response_text))
                .collect(),
            ledger: Arc::new(Ledger::default()),
        }
    }

    /// Builds records directly from `(prompt, response)` pairs.
    pub fn from_prompts<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        Self::new(pairs.into_iter().map(|(p, r)| ReplayRecord {
            key: prompt_key(p),
            response_text: r.to_string(),
        }))
    }

    pub fn from_jsonl(text: &str) -> Result<Self, BackendError> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: ReplayRecord = serde_json::from_str(line).map_err(|e| {
                BackendError::Config(format!("replay fixture line {}: {e}", i + 1))
            })?;
            records.push(record);
        }
        Ok(Self::new(records))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| BackendError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_jsonl(&text)
    }

    pub fn with_model_id(mut self, model_id: impl Into<String>) -> Self {
        self.model_id = model_id.into();
        self
    }

    pub fn with_ledger(mut self, ledger: Arc<Ledger>) -> Self {
        self.ledger = ledger;
        self
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl CompletionBackend for ReplayBackend {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn complete(&self, request: CompletionRequest<'_>) -> Result<Completion, BackendError> {
        let key = prompt_key(request.prompt);
        match self.responses.get(&key) {
            Some(text) => {
                self.ledger.record_request(Some(TokenUsage::default()));
                Ok(Completion {
                    text: text.clone(),
                    usage: TokenUsage::default(),
                    model_id: self.model_id.clone(),
                    cache_hit: false,
                })
            }
            None => {
                self.ledger.record_request(None);
                Err(BackendError::FixtureMissing { key })
            }
        }
    }

    fn ledger(&self) -> &Arc<Ledger> {
        &self.ledger
    }
}
