//! Canned chat policies for exercising the loop without a model, plus an
//! in-process backend and (feature `mock-server`) a local HTTP server.

use std::sync::{Arc, Mutex};

use serde_json::{json, Value};

use crate::backend::{parse_response, ChatBackend, ChatRequest, ChatResponse};
use crate::error::AgentError;
use crate::tools::{DISTANCE, EMIT_PLAN, FINALIZE, RANK, RENDER, RETRIEVE};

/// Maps a request body to an assistant message.
pub type Policy = Arc<dyn Fn(&Value) -> Value + Send + Sync>;

/// Assistant message with one tool call whose arguments are sent verbatim.
pub fn raw_call_message(name: &str, arguments: &str) -> Value {
    json!({"role": "assistant", "content": "", "tool_calls": [
        {"id": "c0", "type": "function", "function": {"name": name, "arguments": arguments}}
    ]})
}

pub fn call_message(name: &str, arguments: Value) -> Value {
    raw_call_message(name, &arguments.to_string())
}

pub fn text_message(text: &str) -> Value {
    json!({"role": "assistant", "content": text})
}

/// Number of assistant turns already in the conversation.
pub fn turn_index(request: &Value) -> usize {
    messages(request).iter().filter(|m| m["role"] == "assistant").count()
}

fn messages(request: &Value) -> &[Value] {
    request["messages"].as_array().map(Vec::as_slice).unwrap_or(&[])
}

/// Parsed content of the most recent result of tool `name`.
pub fn last_tool_result(request: &Value, name: &str) -> Option<Value> {
    messages(request)
        .iter()
        .rev()
        .find(|m| m["role"] == "tool" && m["name"] == name)
        .and_then(|m| serde_json::from_str(m["content"].as_str()?).ok())
}

/// plan, retrieve, distance between the first two candidates, rank, then
/// finalize the rank's top id.
pub fn conformance_policy(plan: Value) -> Policy {
    Arc::new(move |req| match turn_index(req) {
        0 => call_message(EMIT_PLAN, json!({"plan": plan})),
        1 => call_message(RETRIEVE, json!({"labels": plan["target_labels"]})),
        2 => {
            let ids: Vec<u64> = last_tool_result(req, RETRIEVE)
                .and_then(|r| r["candidates"].as_array().map(|c| c.iter().filter_map(|x| x["id"].as_u64()).collect()))
                .unwrap_or_default();
            match ids.as_slice() {
                [a, b, ..] => call_message(DISTANCE, json!({"a": a, "b": b})),
                _ => call_message(RANK, json!({})),
            }
        }
        3 if last_tool_result(req, RANK).is_none() => call_message(RANK, json!({})),
        _ => {
            let top = last_tool_result(req, RANK).and_then(|r| r["ranked"][0]["id"].as_u64());
            match top {
                Some(id) => call_message(FINALIZE, json!({"id": id, "rationale": "top geometric candidate"})),
                None => text_message("no candidate"),
            }
        }
    })
}

/// Always answers with tool arguments that are not JSON.
pub fn malformed_policy() -> Policy {
    Arc::new(|_| raw_call_message(EMIT_PLAN, "{\"plan\": {\"schema\": \"plan/1\", "))
}

/// Renders `ids` in one call, shrinks to the cap after an error, then
/// finalizes the first id.
pub fn oversized_render_policy(ids: Vec<u64>) -> Policy {
    Arc::new(move |req| {
        let last = messages(req).last();
        let last_render_failed = last.is_some_and(|m| m["role"] == "tool" && m["name"] == RENDER)
            && last_tool_result(req, RENDER).is_some_and(|r| r.get("error").is_some());
        match turn_index(req) {
            0 => call_message(RENDER, json!({"ids": ids, "view": "top"})),
            _ if last_render_failed => {
                let capped: Vec<u64> = ids.iter().take(crate::config::MAX_RENDER_IDS).copied().collect();
                call_message(RENDER, json!({"ids": capped, "view": "top"}))
            }
            _ => call_message(FINALIZE, json!({"id": ids[0], "rationale": "after render"})),
        }
    })
}

/// Runs a policy in-process and records every request body.
pub struct PolicyBackend {
    policy: Policy,
    pub requests: Mutex<Vec<Value>>,
}

impl PolicyBackend {
    pub fn new(policy: Policy) -> Self {
        Self { policy, requests: Mutex::new(Vec::new()) }
    }
}

impl ChatBackend for PolicyBackend {
    fn model(&self) -> &str {
        "mock"
    }

    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, AgentError> {
        let body = request.to_json();
        let msg = (self.policy)(&body);
        self.requests.lock().expect("request log").push(body);
        parse_response(&json!({"message": msg}))
    }
}

#[cfg(feature = "mock-server")]
pub use server::MockServer;

#[cfg(feature = "mock-server")]
mod server {
    use std::net::SocketAddr;
    use std::sync::{Arc, Mutex};

    use axum::extract::State;
    use axum::routing::post;
    use axum::{Json, Router};
    use serde_json::{json, Value};
    use tokio::sync::oneshot;

    use super::Policy;

    #[derive(Clone)]
    struct Shared {
        policy: Policy,
        requests: Arc<Mutex<Vec<Value>>>,
    }

    async fn completions(State(s): State<Shared>, Json(body): Json<Value>) -> Json<Value> {
        let msg = (s.policy)(&body);
        s.requests.lock().expect("request log").push(body);
        Json(json!({"choices": [{"index": 0, "message": msg, "finish_reason": "tool_calls"}]}))
    }

    /// Chat-completion endpoint on 127.0.0.1 serving a [`Policy`]; stops on drop.
    pub struct MockServer {
        addr: SocketAddr,
        requests: Arc<Mutex<Vec<Value>>>,
        stop: Option<oneshot::Sender<()>>,
        thread: Option<std::thread::JoinHandle<()>>,
    }

    impl MockServer {
        pub fn start(policy: Policy) -> std::io::Result<Self> {
            let std_listener = std::net::TcpListener::bind("127.0.0.1:0")?;
            std_listener.set_nonblocking(true)?;
            let addr = std_listener.local_addr()?;
            let requests = Arc::new(Mutex::new(Vec::new()));
            let shared = Shared { policy, requests: requests.clone() };
            let (stop, stopped) = oneshot::channel::<()>();
            let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(1).enable_all().build()?;
            let thread = std::thread::spawn(move || {
                rt.block_on(async move {
                    let listener = tokio::net::TcpListener::from_std(std_listener).expect("listener");
                    let app = Router::new().route("/v1/chat/completions", post(completions)).with_state(shared);
                    let _ = axum::serve(listener, app)
                        .with_graceful_shutdown(async {
                            let _ = stopped.await;
                        })
                        .await;
                });
            });
            Ok(Self { addr, requests, stop: Some(stop), thread: Some(thread) })
        }

        pub fn base_url(&self) -> String {
            format!("http://{}", self.addr)
        }

        pub fn requests(&self) -> Vec<Value> {
            self.requests.lock().expect("request log").clone()
        }
    }

    impl Drop for MockServer {
        fn drop(&mut self) {
            if let Some(s) = self.stop.take() {
                let _ = s.send(());
            }
            if let Some(t) = self.thread.take() {
                let _ = t.join();
            }
        }
    }
}
