//! Completion backends: an OpenAI-compatible HTTP client, a replay backend
//! driven by JSONL fixtures, and a persistent response cache that wraps
//! either one. All backends share a [`Ledger`] for token and cost tracking.

mod cache;
mod http;
mod ledger;
mod replay;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::{CacheEntry, CachedBackend};
pub use http::{BackendConfig, HttpBackend, RetryPolicy, DEFAULT_API_KEY_ENV};
pub use ledger::{estimate_cost, CostLedger, Ledger, PriceTable};
pub use replay::{ReplayBackend, ReplayRecord};

#[derive(Debug, Error)]
pub enum BackendError {
    /// Misconfiguration that will affect every request (missing credential,
    /// bad endpoint URL). Batch runs stop on this.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("authentication rejected by {endpoint} (HTTP {status})")]
    Auth { endpoint: String, status: u16 },
    #[error("no replay fixture for prompt key {key}")]
    FixtureMissing { key: String },
    #[error("request failed after {attempts} attempt(s): {cause}")]
    Request { attempts: u32, cause: String },
    #[error("malformed backend response: {0}")]
    Response(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl BackendError {
    /// Errors that make continuing a batch pointless.
    pub fn is_fatal(&self) -> bool {
        matches!(self, BackendError::Config(_) | BackendError::Auth { .. })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub input_tokens: u64,
    pub output_tokens: u64,
}

/// One prompt to complete. `variant` is zero for ordinary requests; a
/// nonzero value marks a deliberate re-ask of the same prompt and gets its
/// own cache entry.
#[derive(Debug, Clone, Copy)]
pub struct CompletionRequest<'a> {
    pub prompt: &'a str,
    pub variant: u32,
}

impl<'a> CompletionRequest<'a> {
    pub fn new(prompt: &'a str) -> Self {
        CompletionRequest { prompt, variant: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub usage: TokenUsage,
    pub model_id: String,
    pub cache_hit: bool,
}

pub trait CompletionBackend: Send + Sync {
    fn model_id(&self) -> &str;

    fn complete(&self, request: CompletionRequest<'_>) -> Result<Completion, BackendError>;

    fn ledger(&self) -> &Arc<Ledger>;
}

impl<B: CompletionBackend + ?Sized> CompletionBackend for Box<B> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn complete(&self, request: CompletionRequest<'_>) -> Result<Completion, BackendError> {
        (**self).complete(request)
    }

    fn ledger(&self) -> &Arc<Ledger> {
        (**self).ledger()
    }
}

/// Hex SHA-256 of the prompt text; the key used by replay fixtures.
pub fn prompt_key(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// Cache key over the model id, the full prompt and the sampling
/// parameters. No sampling overrides are sent, so the parameter block is
/// empty unless the request is a re-ask.
pub fn cache_key(model_id: &str, request: &CompletionRequest<'_>) -> String {
    let params = if request.variant == 0 {
        serde_json::json!({})
    } else {
        serde_json::json!({ "variant": request.variant })
    };
    let canonical = serde_json::json!({
        "model": model_id,
        "prompt": request.prompt,
        "params": params,
    });
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}
