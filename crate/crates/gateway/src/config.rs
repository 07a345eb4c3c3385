use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::GatewayError;

/// Request and response shape of the remote endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adapter {
    /// `POST {model, messages, temperature, max_tokens}` with a bearer token;
    /// answer in `choices[0].message.content`.
    #[default]
    OpenAi,
    /// Same body with an `x-api-key` header; answer in `content[*].text`.
    Anthropic,
}

impl fmt::Display for Adapter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Adapter::OpenAi => "openai",
            Adapter::Anthropic => "anthropic",
        })
    }
}

impl FromStr for Adapter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "openai" => Ok(Adapter::OpenAi),
            "anthropic" => Ok(Adapter::Anthropic),
            other => Err(format!(
                "unknown adapter `{other}` (expected openai or anthropic)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatewayConfig {
    /// Full URL of the completion endpoint.
    pub endpoint_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub max_concurrency: usize,
    pub request_timeout: Duration,
    pub max_retries: u32,
    pub backoff_base: Duration,
    pub temperature: f64,
    pub max_tokens: u32,
    pub adapter: Adapter,
}

impl GatewayConfig {
    pub fn new(
        endpoint_url: impl Into<String>,
        model_name: impl Into<String>,
        api_key_env: impl Into<String>,
    ) -> Self {
        Self {
            endpoint_url: endpoint_url.into(),
            model_name: model_name.into(),
            api_key_env: api_key_env.into(),
            max_concurrency: 4,
            request_timeout: Duration::from_secs(60),
            max_retries: 3,
            backoff_base: Duration::from_secs(1),
            temperature: 1.0,
            max_tokens: 256,
            adapter: Adapter::OpenAi,
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let mut problems = Vec::new();
        if self.max_concurrency < 1 {
            problems.push("max_concurrency must be >= 1");
        }
        if self.endpoint_url.is_empty() {
            problems.push("endpoint_url is empty");
        }
        if self.model_name.is_empty() {
            problems.push("model_name is empty");
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            problems.push("temperature must be a non-negative number");
        }
        if self.max_tokens < 1 {
            problems.push("max_tokens must be >= 1");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(GatewayError::Config(problems.join("; ")))
        }
    }
}
