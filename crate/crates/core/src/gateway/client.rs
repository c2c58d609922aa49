use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::{ProviderConfig, ProviderKind, TokenBucket, SYSTEM_PREAMBLE};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ParseOutcome {
    NotParsed,
    Success,
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum CompletionError {
    #[error("missing or rejected API key ({detail})")]
    AuthError { detail: String },
    #[error("request timed out")]
    Timeout,
    #[error("rate limited after retries")]
    RateLimited,
    #[error("provider returned status {status}: {body}")]
    ProviderError { status: u16, body: String },
    #[error("transport failure: {detail}")]
    Transport { detail: String },
}

/// One prompt/response round trip, kept verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawExchange {
    pub system: String,
    pub prompt: String,
    pub raw_response: String,
    pub latency_ms: u64,
    /// HTTP attempt that produced the response, starting at 1.
    pub attempt: u32,
    /// 0 for the original prompt, then 1.. for repair re-prompts.
    #[serde(default)]
    pub repair_round: u32,
    pub parse_outcome: ParseOutcome,
    #[serde(default)]
    pub error: Option<CompletionError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpRequest {
    pub url: String,
    pub headers: Vec<(String, String)>,
    pub body: String,
    pub timeout: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("timed out")]
    Timeout,
    #[error("{0}")]
    Other(String),
}

pub trait HttpTransport: Send + Sync {
    fn post(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct UreqTransport;

impl HttpTransport for UreqTransport {
    fn post(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(request.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut builder = agent.post(&request.url);
        for (k, v) in &request.headers {
            builder = builder.header(k, v);
        }
        let mut response = builder.send(request.body.as_str()).map_err(|e| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout,
            other => TransportError::Other(other.to_string()),
        })?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError::Other(e.to_string()))?;
        Ok(HttpResponse { status, body })
    }
}

type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

/// Blocking chat-completion client for one provider configuration.
#[derive(Clone)]
pub struct ProviderClient {
    config: ProviderConfig,
    transport: Arc<dyn HttpTransport>,
    sleeper: Sleeper,
    limiter: Option<Arc<TokenBucket>>,
    api_key: Option<String>,
}

impl std::fmt::Debug for ProviderClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProviderClient")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl ProviderClient {
    pub fn new(config: ProviderConfig) -> Self {
        ProviderClient {
            config,
            transport: Arc::new(UreqTransport),
            sleeper: Arc::new(std::thread::sleep),
            limiter: None,
            api_key: None,
        }
    }

    pub fn with_transport(mut self, transport: Arc<dyn HttpTransport>) -> Self {
        self.transport = transport;
        self
    }

    pub fn with_sleeper(mut self, sleeper: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleeper = Arc::new(sleeper);
        self
    }

    pub fn with_limiter(mut self, limiter: Arc<TokenBucket>) -> Self {
        self.limiter = Some(limiter);
        self
    }

    /// Uses `key` instead of reading the configured environment variable.
    pub fn with_api_key(mut self, key: impl Into<String>) -> Self {
        self.api_key = Some(key.into());
        self
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    fn resolve_key(&self) -> Result<String, CompletionError> {
        if let Some(k) = &self.api_key {
            return Ok(k.clone());
        }
        let name = self.config.key_env();
        match std::env::var(name) {
            Ok(k) if !k.trim().is_empty() => Ok(k),
            _ => Err(CompletionError::AuthError {
                detail: format!("environment variable {name} is not set"),
            }),
        }
    }

    fn build_request(&self, key: &str, system: &str, prompt: &str) -> HttpRequest {
        let cfg = &self.config;
        let (headers, body) = match cfg.provider {
            ProviderKind::OpenAiCompatible => (
                vec![("Authorization".to_string(), format!("Bearer {key}"))],
                json!({
                    "model": cfg.model,
                    "messages": [
                        {"role": "system", "content": system},
                        {"role": "user", "content": prompt},
                    ],
                    "temperature": cfg.temperature,
                    "max_tokens": cfg.max_output_tokens,
                }),
            ),
            ProviderKind::Anthropic => (
                vec![
                    ("x-api-key".to_string(), key.to_string()),
                    ("anthropic-version".to_string(), "2023-06-01".to_string()),
                ],
                json!({
                    "model": cfg.model,
                    "system": system,
                    "messages": [{"role": "user", "content": prompt}],
                    "temperature": cfg.temperature,
                    "max_tokens": cfg.max_output_tokens,
                }),
            ),
            ProviderKind::Gemini => (
                vec![("x-goog-api-key".to_string(), key.to_string())],
                json!({
                    "systemInstruction": {"parts": [{"text": system}]},
                    "contents": [{"role": "user", "parts": [{"text": prompt}]}],
                    "generationConfig": {
                        "temperature": cfg.temperature,
                        "maxOutputTokens": cfg.max_output_tokens,
                    },
                }),
            ),
        };
        let mut headers = headers;
        headers.push(("content-type".to_string(), "application/json".to_string()));
        HttpRequest {
            url: cfg.endpoint_url(),
            headers,
            body: body.to_string(),
            timeout: Duration::from_secs(cfg.timeout_secs),
        }
    }

    fn extract_text(&self, body: &str) -> Option<String> {
        let v: Value = serde_json::from_str(body).ok()?;
        match self.config.provider {
            ProviderKind::OpenAiCompatible => v
                .pointer("/choices/0/message/content")?
                .as_str()
                .map(str::to_string),
            ProviderKind::Anthropic => {
                let parts = v.get("content")?.as_array()?;
                Some(
                    parts
                        .iter()
                        .filter_map(|p| p.get("text").and_then(Value::as_str))
                        .collect(),
                )
            }
            ProviderKind::Gemini => {
                let parts = v.pointer("/candidates/0/content/parts")?.as_array()?;
                Some(
                    parts
                        .iter()
                        .filter_map(|p| p.get("text").and_then(Value::as_str))
                        .collect(),
                )
            }
        }
    }

    /// One chat completion with retries. Failures are recorded in the returned exchange.
    pub fn complete(&self, system: &str, prompt: &str) -> RawExchange {
        let started = Instant::now();
        let mut exchange = RawExchange {
            system: system.to_string(),
            prompt: prompt.to_string(),
            raw_response: String::new(),
            latency_ms: 0,
            attempt: 0,
            repair_round: 0,
            parse_outcome: ParseOutcome::NotParsed,
            error: None,
        };
        let key = match self.resolve_key() {
            Ok(k) => k,
            Err(e) => {
                exchange.error = Some(e);
                return exchange;
            }
        };
        let request = self.build_request(&key, system, prompt);
        let max_attempts = self.config.max_retries + 1;
        for attempt in 1..=max_attempts {
            exchange.attempt = attempt;
            if let Some(limiter) = &self.limiter {
                limiter.acquire();
            }
            let result = self.transport.post(&request);
            let retryable = match result {
                Ok(resp) if (200..300).contains(&resp.status) => {
                    match self.extract_text(&resp.body) {
                        Some(text) => {
                            exchange.raw_response = text;
                            exchange.error = None;
                        }
                        None => {
                            exchange.raw_response = resp.body.clone();
                            exchange.error = Some(CompletionError::ProviderError {
                                status: resp.status,
                                body: resp.body,
                            });
                        }
                    }
                    false
                }
                Ok(resp) if resp.status == 401 || resp.status == 403 => {
                    exchange.raw_response = resp.body.clone();
                    exchange.error = Some(CompletionError::AuthError {
                        detail: format!("status {}: {}", resp.status, resp.body),
                    });
                    false
                }
                Ok(resp) if resp.status == 429 => {
                    exchange.raw_response = resp.body;
                    exchange.error = Some(CompletionError::RateLimited);
                    true
                }
                Ok(resp) => {
                    let retry = resp.status >= 500;
                    exchange.raw_response = resp.body.clone();
                    exchange.error = Some(CompletionError::ProviderError {
                        status: resp.status,
                        body: resp.body,
                    });
                    retry
                }
                Err(TransportError::Timeout) => {
                    exchange.error = Some(CompletionError::Timeout);
                    true
                }
                Err(TransportError::Other(detail)) => {
                    exchange.error = Some(CompletionError::Transport { detail });
                    true
                }
            };
            if !retryable || attempt == max_attempts {
                break;
            }
            let backoff = self
                .config
                .retry_backoff_ms
                .saturating_mul(1u64 << (attempt - 1).min(16));
            tracing::debug!(attempt, backoff_ms = backoff, "retrying provider call");
            (self.sleeper)(Duration::from_millis(backoff));
        }
        exchange.latency_ms = started.elapsed().as_millis() as u64;
        exchange
    }
}

/// A single completion against `config` with the neutral system preamble.
pub fn complete(config: &ProviderConfig, prompt: &str) -> RawExchange {
    ProviderClient::new(config.clone()).complete(SYSTEM_PREAMBLE, prompt)
}
