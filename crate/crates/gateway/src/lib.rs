//! Chat-completion gateway: request hashing, an OpenAI-compatible HTTP
//! client, a record/replay cache, cost accounting and a budget guard.

pub mod cache;
pub mod http;
pub mod ledger;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

pub use cache::{CacheMode, CachedModel};
pub use http::{HttpConfig, OpenAiClient};
pub use ledger::{budget_guard, BudgetDecision, CostLedger, Pricing, Rates};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Message { role: "user".into(), content: content.into() }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Message { role: "system".into(), content: content.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

impl CompletionRequest {
    pub fn new(model: impl Into<String>, temperature: f64, prompt: impl Into<String>) -> Self {
        CompletionRequest { model: model.into(), messages: vec![Message::user(prompt)], temperature, max_tokens: None }
    }

    /// Canonical JSON: object keys sorted, no whitespace.
    pub fn canonical_json(&self) -> String {
        // serde_json's Value map is ordered by key
        let value = serde_json::to_value(self).expect("request serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    /// Hex sha256 of the canonical JSON.
    pub fn request_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// Where in an experiment a request came from. Not part of the hash.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestTag {
    pub stage: String,
    pub round: u32,
    pub bidder: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<String>,
}

impl std::fmt::Display for RequestTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "stage {} round {} bidder {}", self.stage, self.round, self.bidder)?;
        if let Some(step) = &self.step {
            write!(f, " ({step})")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// One completed call, as persisted in the cache file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub request_hash: String,
    pub response_text: String,
    pub token_usage: TokenUsage,
    pub latency_ms: u64,
    pub attempts: u32,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("authentication failed (HTTP {status}): {body}")]
    Auth { status: u16, body: String },
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("malformed endpoint response: {0}")]
    Malformed(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("replay cache miss at {tag} (request {hash})")]
    CacheMiss { hash: String, tag: String },
    #[error("budget exhausted: spent {spent:.4}, projected {projected:.4}, limit {limit:.4}")]
    Budget { spent: f64, projected: f64, limit: f64 },
    #[error("endpoint not configured: {0}")]
    NotConfigured(String),
    #[error("cache io: {0}")]
    Io(String),
}

/// A chat model the agents can query. Implementations must be safe for
/// concurrent use.
pub trait ChatModel: Send + Sync {
    fn complete(&self, request: &CompletionRequest, tag: &RequestTag) -> Result<CompletionRecord, GatewayError>;
}

impl<T: ChatModel + ?Sized> ChatModel for std::sync::Arc<T> {
    fn complete(&self, request: &CompletionRequest, tag: &RequestTag) -> Result<CompletionRecord, GatewayError> {
        (**self).complete(request, tag)
    }
}

/// Counting semaphore bounding in-flight calls.
#[derive(Debug)]
pub struct Limiter {
    slots: Mutex<usize>,
    freed: Condvar,
}

pub struct Permit<'a> {
    limiter: &'a Limiter,
}

impl Limiter {
    pub fn new(max_in_flight: usize) -> Self {
        Limiter { slots: Mutex::new(max_in_flight.max(1)), freed: Condvar::new() }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut slots = self.slots.lock().expect("limiter lock");
        while *slots == 0 {
            slots = self.freed.wait(slots).expect("limiter lock");
        }
        *slots -= 1;
        Permit { limiter: self }
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.limiter.slots.lock().expect("limiter lock") += 1;
        self.limiter.freed.notify_one();
    }
}

/// Retry schedule for transport and rate-limit failures.
#[derive(Clone, Debug, PartialEq)]
pub struct Backoff {
    pub max_attempts: u32,
    pub base: Duration,
    pub cap: Duration,
}

impl Default for Backoff {
    fn default() -> Self {
        Backoff { max_attempts: 5, base: Duration::from_millis(500), cap: Duration::from_secs(30) }
    }
}

impl Backoff {
    /// Delay before attempt `attempt + 1`, doubling from `base`.
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt.saturating_sub(1)).unwrap_or(u32::MAX);
        self.base.saturating_mul(factor).min(self.cap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_key_order() {
        let req = CompletionRequest::new("gpt-4", 0.5, "hello");
        let reordered = r#"{"temperature":0.5,"messages":[{"content":"hello","role":"user"}],"model":"gpt-4"}"#;
        let parsed: CompletionRequest = serde_json::from_str(reordered).unwrap();
        assert_eq!(parsed.request_hash(), req.request_hash());
        assert_eq!(
            req.canonical_json(),
            r#"{"messages":[{"content":"hello","role":"user"}],"model":"gpt-4","temperature":0.5}"#
        );
    }

    #[test]
    fn hash_covers_temperature_and_messages() {
        let a = CompletionRequest::new("gpt-4", 0.5, "hello");
        let mut b = a.clone();
        b.temperature = 0.7;
        assert_ne!(a.request_hash(), b.request_hash());
        let mut c = a.clone();
        c.messages[0].content.push('!');
        assert_ne!(a.request_hash(), c.request_hash());
    }

    #[test]
    fn backoff_doubles_then_caps() {
        let b = Backoff { max_attempts: 10, base: Duration::from_millis(100), cap: Duration::from_millis(350) };
        assert_eq!(b.delay(1), Duration::from_millis(100));
        assert_eq!(b.delay(2), Duration::from_millis(200));
        assert_eq!(b.delay(3), Duration::from_millis(350));
    }

    #[test]
    fn limiter_bounds_concurrency() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let limiter = Limiter::new(2);
        let live = AtomicUsize::new(0);
        let peak = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| {
                    let _p = limiter.acquire();
                    let now = live.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    std::thread::sleep(Duration::from_millis(5));
                    live.fetch_sub(1, Ordering::SeqCst);
                });
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
