use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{
    cache_key, BackendError, Completion, CompletionBackend, CompletionRequest, Ledger,
    TokenUsage,
};

/// One line of the append-only cache file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub response_text: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

struct CacheState {
    entries: HashMap<String, CacheEntry>,
    file: File,
}

/// Wraps a backend with a JSONL response cache.
///
/// Hits are served without calling the inner backend and bill no tokens.
/// Misses call through and append a line to the cache file.
pub struct CachedBackend<B> {
    inner: B,
    path: PathBuf,
    state: Mutex<CacheState>,
    load_warnings: Vec<String>,
}

impl<B: CompletionBackend> CachedBackend<B> {
    /// Opens (or creates) the cache at `path`. Unreadable lines are skipped
    /// and reported through [`CachedBackend::load_warnings`].
    pub fn open(inner: B, path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let path = path.as_ref().to_path_buf();
        let io_err = |source| BackendError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut entries = HashMap::new();
        let mut load_warnings = Vec::new();
        if path.exists() {
            let text = std::fs::read_to_string(&path).map_err(io_err)?;
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheEntry>(line) {
                    Ok(entry) => {
                        entries.insert(entry.key.clone(), entry);
                    }
                    Err(e) => {
                        let msg = format!("{}:{}: skipping corrupt cache line ({e})", path.display(), i + 1);
                        log::warn!("{msg}");
                        load_warnings.push(msg);
                    }
                }
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err)?;
        Ok(CachedBackend {
            inner,
            path,
            state: Mutex::new(CacheState { entries, file }),
            load_warnings,
        })
    }

    pub fn load_warnings(&self) -> &[String] {
        &self.load_warnings
    }

    pub fn len(&self) -> usize {
        self.state.lock().expect("cache lock").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    pub fn into_inner(self) -> B {
        self.inner
    }
}

impl<B: CompletionBackend> CompletionBackend for CachedBackend<B> {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }

    fn complete(&self, request: CompletionRequest<'_>) -> Result<Completion, BackendError> {
        let key = cache_key(self.inner.model_id(), &request);
        if let Some(entry) = self.state.lock().expect("cache lock").entries.get(&key) {
            self.inner.ledger().record_cache_hit();
            return Ok(Completion {
                text: entry.response_text.clone(),
                usage: TokenUsage::default(),
                model_id: self.inner.model_id().to_string(),
                cache_hit: true,
            });
        }

        let completion = self.inner.complete(request)?;
        let entry = CacheEntry {
            key: key.clone(),
            response_text: completion.text.clone(),
            input_tokens: completion.usage.input_tokens,
            output_tokens: completion.usage.output_tokens,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let mut line = serde_json::to_string(&entry).expect("cache entry serializes");
        line.push('\n');
        let mut state = self.state.lock().expect("cache lock");
        state
            .file
            .write_all(line.as_bytes())
            .and_then(|_| state.file.flush())
            .map_err(|source| BackendError::Io {
                path: self.path.display().to_string(),
                source,
            })?;
        state.entries.insert(key, entry);
        Ok(completion)
    }

    fn ledger(&self) -> &Arc<Ledger> {
        self.inner.ledger()
    }
}
