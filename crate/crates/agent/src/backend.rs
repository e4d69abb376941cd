//! Chat-completion wire protocol and an HTTP client for it.

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde_json::{json, Value};

use crate::error::AgentError;

pub const API_KEY_ENV: &str = "AGENT_API_KEY";
pub const BACKEND_URL_ENV: &str = "AGENT_BACKEND_URL";
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Value>,
    pub tools: Vec<Value>,
}

impl ChatRequest {
    /// Request body; temperature is pinned to 0.
    pub fn to_json(&self) -> Value {
        json!({"model": self.model, "temperature": 0, "messages": self.messages, "tools": self.tools})
    }
}

/// Tool call as received; `arguments` is the raw JSON string.
#[derive(Debug, Clone, PartialEq)]
pub struct RawToolCall {
    pub name: String,
    pub arguments: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChatResponse {
    pub text: Option<String>,
    pub tool_calls: Vec<RawToolCall>,
}

/// Accepts `{"message": {...}}` or `{"choices": [{"message": {...}}]}`, with
/// tool calls either flat (`name`, `arguments`) or nested under `function`.
pub fn parse_response(body: &Value) -> Result<ChatResponse, AgentError> {
    let msg = body
        .get("message")
        .or_else(|| body.pointer("/choices/0/message"))
        .ok_or_else(|| AgentError::Protocol("response has no message".into()))?;
    let text = msg.get("content").and_then(Value::as_str).filter(|s| !s.is_empty()).map(str::to_string);
    let mut tool_calls = Vec::new();
    if let Some(calls) = msg.get("tool_calls").and_then(Value::as_array) {
        for c in calls {
            let f = c.get("function").unwrap_or(c);
            let name = f
                .get("name")
                .and_then(Value::as_str)
                .ok_or_else(|| AgentError::Protocol("tool call without a name".into()))?;
            let arguments = match f.get("arguments") {
                Some(Value::String(s)) => s.clone(),
                Some(Value::Null) | None => "{}".to_string(),
                Some(other) => other.to_string(),
            };
            tool_calls.push(RawToolCall { name: name.to_string(), arguments });
        }
    }
    Ok(ChatResponse { text, tool_calls })
}

pub trait ChatBackend: Send + Sync {
    fn model(&self) -> &str;
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, AgentError>;
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
pub struct Limiter {
    permits: Mutex<usize>,
    cv: Condvar,
}

pub struct Permit<'a>(&'a Limiter);

impl Limiter {
    pub fn new(n: usize) -> Self {
        Self { permits: Mutex::new(n.max(1)), cv: Condvar::new() }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut p = self.permits.lock().expect("limiter lock");
        while *p == 0 {
            p = self.cv.wait(p).expect("limiter lock");
        }
        *p -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.permits.lock().expect("limiter lock") += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendEndpoint {
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout_s: f64,
}

impl BackendEndpoint {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self { base_url: base_url.into(), model: model.into(), api_key: std::env::var(API_KEY_ENV).ok(), timeout_s: 120.0 }
    }
}

pub struct HttpBackend {
    endpoint: BackendEndpoint,
    client: reqwest::blocking::Client,
    limiter: Arc<Limiter>,
}

impl HttpBackend {
    pub fn new(endpoint: BackendEndpoint) -> Result<Self, AgentError> {
        Self::with_limiter(endpoint, Arc::new(Limiter::new(DEFAULT_MAX_IN_FLIGHT)))
    }

    /// Share `limiter` between backends to bound requests across runs.
    pub fn with_limiter(endpoint: BackendEndpoint, limiter: Arc<Limiter>) -> Result<Self, AgentError> {
        if !(endpoint.timeout_s > 0.0) {
            return Err(AgentError::InvalidConfig("backend timeout must be > 0".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(endpoint.timeout_s))
            .build()
            .map_err(|e| AgentError::BackendUnreachable(e.to_string()))?;
        Ok(Self { endpoint, client, limiter })
    }

    fn url(&self) -> String {
        format!("{}/v1/chat/completions", self.endpoint.base_url.trim_end_matches('/'))
    }
}

impl ChatBackend for HttpBackend {
    fn model(&self) -> &str {
        &self.endpoint.model
    }

    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, AgentError> {
        let _permit = self.limiter.acquire();
        let mut req = self
            .client
            .post(self.url())
            .header("content-type", "application/json")
            .body(serde_json::to_vec(&request.to_json()).expect("request serializes"));
        if let Some(key) = &self.endpoint.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| AgentError::BackendUnreachable(e.to_string()))?;
        let status = resp.status();
        let bytes = resp.bytes().map_err(|e| AgentError::BackendUnreachable(e.to_string()))?;
        if !status.is_success() {
            let snippet = String::from_utf8_lossy(&bytes[..bytes.len().min(200)]).into_owned();
            return Err(AgentError::Protocol(format!("HTTP {status}: {snippet}")));
        }
        let body: Value = serde_json::from_slice(&bytes).map_err(|e| AgentError::Protocol(e.to_string()))?;
        parse_response(&body)
    }
}
