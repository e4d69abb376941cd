//! Grounding agent over an object lookup table: a deterministic scripted
//! pipeline and a tool-calling loop against a chat-completion backend.

pub mod answer;
pub mod backend;
pub mod config;
pub mod error;
pub mod llm;
pub mod mock;
pub mod scripted;
pub mod tools;

pub use answer::{load_answers, AnswerRecord, Failure, GroundingAnswer, TraceEntry};
pub use backend::{BackendEndpoint, ChatBackend, ChatRequest, ChatResponse, HttpBackend, Limiter};
pub use config::{ToolConfig, DEFAULT_MAX_TOOL_CALLS, MAX_RENDER_IDS};
pub use error::{AgentError, ToolError};
pub use llm::run_llm;
pub use scripted::{label_only_plan_from_query, run_scripted, run_scripted_fallback, SCRIPTED_FALLBACK};
pub use tools::{dispatch_tool, ToolCall, ToolContext, ToolOutput};
