use std::fmt;
use std::time::Duration;

use futures::stream::{self, StreamExt};
use rand::Rng;
use serde_json::{json, Value};
use thiserror::Error;
use tracing::{debug, warn};

use crate::{Adapter, GatewayConfig};

const ANTHROPIC_VERSION: &str = "2023-06-01";
const MAX_BACKOFF: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GatewayError {
    #[error("API key variable `{var}` is not set")]
    MissingCredential { var: String },
    #[error("invalid gateway config: {0}")]
    Config(String),
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("endpoint returned HTTP {status}")]
    Http { status: u16 },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted {
        attempts: u32,
        last: Box<GatewayError>,
    },
}

impl GatewayError {
    /// Transport failures, timeouts, rate limits and server errors.
    pub fn is_retryable(&self) -> bool {
        match self {
            GatewayError::Transport(_) => true,
            GatewayError::Http { status } => *status == 408 || *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

pub struct Gateway {
    config: GatewayConfig,
    client: reqwest::Client,
    api_key: String,
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway")
            .field("config", &self.config)
            .field("api_key", &"<redacted>")
            .finish()
    }
}

impl Gateway {
    /// Reads the key from the configured environment variable. Fails before
    /// any request if it is unset or empty.
    pub fn from_env(config: GatewayConfig) -> Result<Self, GatewayError> {
        let key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| GatewayError::MissingCredential {
                var: config.api_key_env.clone(),
            })?;
        Self::with_key(config, key)
    }

    pub fn with_key(config: GatewayConfig, api_key: String) -> Result<Self, GatewayError> {
        config.validate()?;
        let client = reqwest::Client::builder()
            .timeout(config.request_timeout)
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(Self {
            config,
            client,
            api_key,
        })
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    /// One completion, retried with jittered exponential backoff on
    /// retryable failures.
    pub async fn complete(&self, prompt: &str) -> Result<String, GatewayError> {
        let mut attempt = 0u32;
        loop {
            match self.send(prompt).await {
                Ok(text) => return Ok(text),
                Err(e) if !e.is_retryable() => return Err(e),
                Err(e) if attempt >= self.config.max_retries => {
                    warn!(attempts = attempt + 1, error = %e, "completion failed, retries exhausted");
                    return Err(GatewayError::Exhausted {
                        attempts: attempt + 1,
                        last: Box::new(e),
                    });
                }
                Err(e) => {
                    let delay = self.backoff(attempt);
                    debug!(attempt, ?delay, error = %e, "retrying completion");
                    tokio::time::sleep(delay).await;
                    attempt += 1;
                }
            }
        }
    }

    /// Completes every prompt with at most `max_concurrency` requests in
    /// flight. Results are in input order; failures are per prompt.
    pub async fn batch_complete(&self, prompts: &[String]) -> Vec<Result<String, GatewayError>> {
        stream::iter(prompts.iter().map(|p| self.complete(p)))
            .buffered(self.config.max_concurrency)
            .collect()
            .await
    }

    /// `base * 2^attempt`, scaled by a random factor in [0.5, 1.5).
    fn backoff(&self, attempt: u32) -> Duration {
        let exp = self
            .config
            .backoff_base
            .saturating_mul(2u32.saturating_pow(attempt));
        exp.mul_f64(rand::rng().random_range(0.5..1.5))
            .min(MAX_BACKOFF)
    }

    async fn send(&self, prompt: &str) -> Result<String, GatewayError> {
        let c = &self.config;
        let body = json!({
            "model": c.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": c.temperature,
            "max_tokens": c.max_tokens,
        });
        let request = self.client.post(&c.endpoint_url).json(&body);
        let request = match c.adapter {
            Adapter::OpenAi => request.bearer_auth(&self.api_key),
            Adapter::Anthropic => request
                .header("x-api-key", &self.api_key)
                .header("anthropic-version", ANTHROPIC_VERSION),
        };
        let response = request
            .send()
            .await
            .map_err(|e| GatewayError::Transport(e.without_url().to_string()))?;
        let status = response.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => return Err(GatewayError::Auth { status }),
            _ => return Err(GatewayError::Http { status }),
        }
        let value: Value = response
            .json()
            .await
            .map_err(|e| GatewayError::Malformed(e.without_url().to_string()))?;
        extract_text(c.adapter, &value)
    }
}

fn extract_text(adapter: Adapter, value: &Value) -> Result<String, GatewayError> {
    let text = match adapter {
        Adapter::OpenAi => value["choices"][0]["message"]["content"]
            .as_str()
            .map(String::from),
        Adapter::Anthropic => value["content"].as_array().map(|blocks| {
            blocks
                .iter()
                .filter(|b| b["type"] == "text")
                .filter_map(|b| b["text"].as_str())
                .collect::<Vec<_>>()
                .join("")
        }),
    };
    text.ok_or_else(|| GatewayError::Malformed(format!("no assistant text in {adapter} response")))
}
