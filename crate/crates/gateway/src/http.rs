//! OpenAI-compatible chat-completions client.

use crate::ledger::{CostLedger, Pricing};
use crate::{Backoff, ChatModel, CompletionRecord, CompletionRequest, GatewayError, Limiter, RequestTag, TokenUsage};
use serde::Deserialize;
use std::sync::Arc;
use std::time::{Duration, Instant};

pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";

#[derive(Clone, Debug, PartialEq)]
pub struct HttpConfig {
    pub base_url: String,
    pub api_key: String,
    pub org_id: Option<String>,
    pub timeout: Duration,
    pub backoff: Backoff,
    pub max_in_flight: usize,
}

impl HttpConfig {
    /// Reads `OPENAI_BASE_URL`, `OPENAI_API_KEY` and `OPENAI_ORG_ID`.
    pub fn from_env() -> Result<HttpConfig, GatewayError> {
        let api_key = std::env::var("OPENAI_API_KEY")
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| GatewayError::NotConfigured("OPENAI_API_KEY is not set".into()))?;
        let base_url = std::env::var("OPENAI_BASE_URL")
            .ok()
            .filter(|u| !u.is_empty())
            .unwrap_or_else(|| DEFAULT_BASE_URL.to_string());
        let org_id = std::env::var("OPENAI_ORG_ID").ok().filter(|o| !o.is_empty());
        Ok(HttpConfig { org_id, ..HttpConfig::new(base_url, api_key) })
    }

    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>) -> HttpConfig {
        HttpConfig {
            base_url: base_url.into(),
            api_key: api_key.into(),
            org_id: None,
            timeout: Duration::from_secs(120),
            backoff: Backoff::default(),
            max_in_flight: 8,
        }
    }
}

pub struct OpenAiClient {
    config: HttpConfig,
    agent: ureq::Agent,
    limiter: Limiter,
    pricing: Pricing,
    ledger: Arc<CostLedger>,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

enum Attempt {
    Done(String, TokenUsage),
    Retry(String),
    Fail(GatewayError),
}

impl OpenAiClient {
    pub fn new(config: HttpConfig, pricing: Pricing, ledger: Arc<CostLedger>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let limiter = Limiter::new(config.max_in_flight);
        OpenAiClient { config, agent, limiter, pricing, ledger }
    }

    pub fn ledger(&self) -> &Arc<CostLedger> {
        &self.ledger
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, body: &str) -> Attempt {
        let _permit = self.limiter.acquire();
        let mut req = self
            .agent
            .post(&self.endpoint())
            .header("Authorization", &format!("Bearer {}", self.config.api_key))
            .header("Content-Type", "application/json");
        if let Some(org) = &self.config.org_id {
            req = req.header("OpenAI-Organization", org);
        }
        let mut resp = match req.send(body.as_bytes()) {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(format!("transport: {e}")),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(format!("reading body: {e}")),
        };
        match status {
            200..=299 => match parse_response(&text) {
                Ok((content, usage)) => Attempt::Done(content, usage),
                Err(e) => Attempt::Fail(e),
            },
            401 | 403 => Attempt::Fail(GatewayError::Auth { status, body: text }),
            408 | 409 | 429 | 500..=599 => Attempt::Retry(format!("HTTP {status}: {text}")),
            _ => Attempt::Fail(GatewayError::Status { status, body: text }),
        }
    }
}

fn parse_response(text: &str) -> Result<(String, TokenUsage), GatewayError> {
    let wire: WireResponse = serde_json::from_str(text).map_err(|e| GatewayError::Malformed(e.to_string()))?;
    let content = wire
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| GatewayError::Malformed("no choices[0].message.content".into()))?;
    let usage = wire
        .usage
        .map(|u| TokenUsage { prompt_tokens: u.prompt_tokens, completion_tokens: u.completion_tokens })
        .unwrap_or_default();
    Ok((content, usage))
}

impl ChatModel for OpenAiClient {
    fn complete(&self, request: &CompletionRequest, tag: &RequestTag) -> Result<CompletionRecord, GatewayError> {
        self.ledger.check()?;
        let body = serde_json::to_string(request).expect("request serializes");
        let started = Instant::now();
        let max = self.config.backoff.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 1..=max {
            match self.attempt(&body) {
                Attempt::Done(response_text, token_usage) => {
                    let cost = self.pricing.cost(&request.model, token_usage);
                    self.ledger.record(token_usage, cost);
                    return Ok(CompletionRecord {
                        request_hash: request.request_hash(),
                        response_text,
                        token_usage,
                        latency_ms: started.elapsed().as_millis() as u64,
                        attempts: attempt,
                        cost,
                    });
                }
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(reason) => {
                    log::warn!("{tag}: attempt {attempt}/{max} failed: {reason}");
                    last = reason;
                    if attempt < max {
                        std::thread::sleep(self.config.backoff.delay(attempt));
                    }
                }
            }
        }
        Err(GatewayError::RetriesExhausted { attempts: max, last })
    }
}
