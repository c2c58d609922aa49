use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProviderKind {
    OpenAiCompatible,
    Anthropic,
    Gemini,
}

impl ProviderKind {
    pub fn default_endpoint(self) -> &'static str {
        match self {
            ProviderKind::OpenAiCompatible => "https://api.openai.com/v1/chat/completions",
            ProviderKind::Anthropic => "https://api.anthropic.com/v1/messages",
            ProviderKind::Gemini => {
                "https://generativelanguage.googleapis.com/v1beta/models/{model}:generateContent"
            }
        }
    }

    pub fn default_key_env(self) -> &'static str {
        match self {
            ProviderKind::OpenAiCompatible => "OPENAI_API_KEY",
            ProviderKind::Anthropic => "ANTHROPIC_API_KEY",
            ProviderKind::Gemini => "GEMINI_API_KEY",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateLimit {
    pub capacity: u32,
    pub refill_per_sec: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub provider: ProviderKind,
    pub model: String,
    /// Full request URL; `{model}` is substituted. Defaults per provider.
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff")]
    pub retry_backoff_ms: u64,
    #[serde(default)]
    pub rate_limit: Option<RateLimit>,
}

fn default_temperature() -> f64 {
    0.7
}

fn default_max_tokens() -> u32 {
    1024
}

fn default_timeout() -> u64 {
    60
}

fn default_retries() -> u32 {
    3
}

fn default_backoff() -> u64 {
    500
}

impl ProviderConfig {
    pub fn new(provider: ProviderKind, model: impl Into<String>) -> Self {
        ProviderConfig {
            provider,
            model: model.into(),
            endpoint: None,
            api_key_env: None,
            temperature: default_temperature(),
            max_output_tokens: default_max_tokens(),
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            retry_backoff_ms: default_backoff(),
            rate_limit: None,
        }
    }

    pub fn endpoint_url(&self) -> String {
        self.endpoint
            .as_deref()
            .unwrap_or(self.provider.default_endpoint())
            .replace("{model}", &self.model)
    }

    pub fn key_env(&self) -> &str {
        self.api_key_env
            .as_deref()
            .unwrap_or(self.provider.default_key_env())
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.timeout_secs == 0 {
            return Err("timeout_secs must be > 0".into());
        }
        if self.model.is_empty() {
            return Err("model must not be empty".into());
        }
        if let Some(limit) = self.rate_limit {
            if limit.capacity == 0 || limit.refill_per_sec.is_nan() || limit.refill_per_sec <= 0.0 {
                return Err("rate_limit needs capacity >= 1 and refill_per_sec > 0".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let cfg: ProviderConfig =
            serde_json::from_str(r#"{"provider": "Gemini", "model": "gemini-2.5-pro"}"#).unwrap();
        assert_eq!(cfg.temperature, 0.7);
        assert_eq!(cfg.max_output_tokens, 1024);
        assert_eq!(cfg.key_env(), "GEMINI_API_KEY");
        assert!(cfg
            .endpoint_url()
            .contains("models/gemini-2.5-pro:generateContent"));
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn zero_timeout_is_invalid() {
        let mut cfg = ProviderConfig::new(ProviderKind::Anthropic, "claude");
        cfg.timeout_secs = 0;
        assert!(cfg.validate().is_err());
    }
}
