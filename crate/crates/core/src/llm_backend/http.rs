use std::sync::Arc;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    BackendError, Completion, CompletionBackend, CompletionRequest, Ledger, PriceTable,
    TokenUsage,
};

pub const DEFAULT_API_KEY_ENV: &str = "GENDERSCOPE_API_KEY";

/// Settings for an OpenAI-compatible chat-completions endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    /// Full URL of the chat-completions route.
    pub endpoint_url: String,
    pub model_id: String,
    /// Name of the environment variable that holds the API key.
    pub api_key_env: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub prices: Option<PriceTable>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            endpoint_url: "https://api.openai.com/v1/chat/completions".to_string(),
            model_id: "gpt-4-turbo-2024-04-09".to_string(),
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
            timeout_secs: 120.0,
            max_retries: 5,
            prices: None,
        }
    }
}

/// Exponential backoff with multiplicative jitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub base: Duration,
    pub factor: f64,
    /// Relative jitter; 0.2 means ±20%.
    pub jitter: f64,
    pub cap: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            base: Duration::from_secs(1),
            factor: 2.0,
            jitter: 0.2,
            cap: Duration::from_secs(60),
        }
    }
}

impl RetryPolicy {
    /// Nominal delay before retry number `attempt` (0-based), before jitter.
    pub fn nominal_delay(&self, attempt: u32) -> Duration {
        let secs = self.base.as_secs_f64() * self.factor.powi(attempt as i32);
        Duration::from_secs_f64(secs.min(self.cap.as_secs_f64()))
    }

    pub fn delay(&self, attempt: u32) -> Duration {
        let nominal = self.nominal_delay(attempt).as_secs_f64();
        let scale = if self.jitter > 0.0 {
            rand::rng().random_range(1.0 - self.jitter..=1.0 + self.jitter)
        } else {
            1.0
        };
        Duration::from_secs_f64((nominal * scale).min(self.cap.as_secs_f64()))
    }
}

enum Attempt {
    Done(Completion, TokenUsage),
    Retry(String),
    Fail(BackendError),
}

/// Blocking chat-completions client. Sends a single user message and no
/// sampling overrides; reads the first choice's message content.
pub struct HttpBackend {
    config: BackendConfig,
    api_key: String,
    client: reqwest::blocking::Client,
    retry: RetryPolicy,
    ledger: Arc<Ledger>,
}

impl HttpBackend {
    /// Resolves the credential from the environment. Fails before any
    /// request is sent if it is missing.
    pub fn new(config: BackendConfig) -> Result<Self, BackendError> {
        let api_key = std::env::var(&config.api_key_env).map_err(|_| {
            BackendError::Config(format!(
                "environment variable {} is not set",
                config.api_key_env
            ))
        })?;
        Self::with_api_key(config, api_key)
    }

    pub fn with_api_key(config: BackendConfig, api_key: impl Into<String>) -> Result<Self, BackendError> {
        let api_key = api_key.into();
        if api_key.trim().is_empty() {
            return Err(BackendError::Config("API key is empty".into()));
        }
        if !(config.timeout_secs > 0.0) {
            return Err(BackendError::Config("timeout must be positive".into()));
        }
        reqwest::Url::parse(&config.endpoint_url).map_err(|e| {
            BackendError::Config(format!("invalid endpoint {:?}: {e}", config.endpoint_url))
        })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::Config(format!("cannot build HTTP client: {e}")))?;
        let ledger = Arc::new(Ledger::new(config.prices));
        Ok(HttpBackend {
            config,
            api_key,
            client,
            retry: RetryPolicy::default(),
            ledger,
        })
    }

    pub fn with_retry_policy(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    fn attempt(&self, body: &serde_json::Value) -> Attempt {
        let response = match self
            .client
            .post(&self.config.endpoint_url)
            .bearer_auth(&self.api_key)
            .json(body)
            .send()
        {
            Ok(r) => r,
            Err(e) if e.is_timeout() || e.is_connect() || e.is_request() => {
                return Attempt::Retry(e.to_string())
            }
            Err(e) => return Attempt::Fail(BackendError::Request { attempts: 1, cause: e.to_string() }),
        };
        let status = response.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Attempt::Fail(BackendError::Auth {
                endpoint: self.config.endpoint_url.clone(),
                status: status.as_u16(),
            });
        }
        if status.as_u16() == 429 || status.is_server_error() {
            return Attempt::Retry(format!("HTTP {status}"));
        }
        let text = match response.text() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        if !status.is_success() {
            return Attempt::Fail(BackendError::Request {
                attempts: 1,
                cause: format!("HTTP {status}: {}", truncate(&text, 200)),
            });
        }
        match parse_chat_response(&text) {
            Ok((content, usage, model)) => Attempt::Done(
                Completion {
                    text: content,
                    usage,
                    model_id: model.unwrap_or_else(|| self.config.model_id.clone()),
                    cache_hit: false,
                },
                usage,
            ),
            Err(e) => Attempt::Fail(e),
        }
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

/// Extracts `choices[0].message.content`, token usage and the reported
/// model name from a chat-completions response body.
fn parse_chat_response(body: &str) -> Result<(String, TokenUsage, Option<String>), BackendError> {
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|e| BackendError::Response(e.to_string()))?;
    let content = value
        .pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .ok_or_else(|| BackendError::Response("missing choices[0].message.content".into()))?;
    let usage = TokenUsage {
        input_tokens: value
            .pointer("/usage/prompt_tokens")
            .and_then(|v| v.as_u64())
            .unwrap_or(0),
        output_tokens: value
            .pointer("/usage/completion_tokens")
            .and_then(|v| v.as_u64())
            .unwrap_or(0),
    };
    let model = value.get("model").and_then(|m| m.as_str()).map(str::to_owned);
    Ok((content.to_string(), usage, model))
}

impl CompletionBackend for HttpBackend {
    fn model_id(&self) -> &str {
        &self.config.model_id
    }

    fn complete(&self, request: CompletionRequest<'_>) -> Result<Completion, BackendError> {
        let body = json!({
            "model": self.config.model_id,
            "messages": [{ "role": "user", "content": request.prompt }],
        });
        let mut attempts = 0u32;
        loop {
            attempts += 1;
            match self.attempt(&body) {
                Attempt::Done(completion, usage) => {
                    self.ledger.record_request(Some(usage));
                    return Ok(completion);
                }
                Attempt::Fail(err) => {
                    self.ledger.record_request(None);
                    return Err(match err {
                        BackendError::Request { cause, .. } => {
                            BackendError::Request { attempts, cause }
                        }
                        other => other,
                    });
                }
                Attempt::Retry(cause) => {
                    self.ledger.record_request(None);
                    if attempts > self.config.max_retries {
                        return Err(BackendError::Request { attempts, cause });
                    }
                    let delay = self.retry.delay(attempts - 1);
                    log::warn!("transient failure ({cause}); retrying in {delay:?}");
                    std::thread::sleep(delay);
                }
            }
        }
    }

    fn ledger(&self) -> &Arc<Ledger> {
        &self.ledger
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_schedule() {
        let p = RetryPolicy::default();
        assert_eq!(p.nominal_delay(0), Duration::from_secs(1));
        assert_eq!(p.nominal_delay(3), Duration::from_secs(8));
        assert_eq!(p.nominal_delay(10), Duration::from_secs(60));
        for attempt in 0..8 {
            let d = p.delay(attempt).as_secs_f64();
            let n = p.nominal_delay(attempt).as_secs_f64();
            assert!(d >= n * 0.8 - 1e-9 && d <= (n * 1.2).min(60.0) + 1e-9);
        }
    }

    #[test]
    fn parses_first_choice() {
        let body = r#"{"model":"gpt-x","choices":[{"message":{"role":"assistant","content":"señor -- S, M"}},{"message":{"content":"no"}}],
                      "usage":{"prompt_tokens":12,"completion_tokens":5}}"#;
        let (text, usage, model) = parse_chat_response(body).unwrap();
        assert_eq!(text, "señor -- S, M");
        assert_eq!(usage, TokenUsage { input_tokens: 12, output_tokens: 5 });
        assert_eq!(model.as_deref(), Some("gpt-x"));
        assert!(parse_chat_response(r#"{"choices":[]}"#).is_err());
    }

    #[test]
    fn missing_credential_is_config_error() {
        let config = BackendConfig {
            api_key_env: "GENDERSCOPE_TEST_SURELY_UNSET_VAR".into(),
            ..BackendConfig::default()
        };
        let err = HttpBackend::new(config).err().unwrap();
        assert!(err.is_fatal());
        assert!(err.to_string().contains("GENDERSCOPE_TEST_SURELY_UNSET_VAR"));
    }
}
