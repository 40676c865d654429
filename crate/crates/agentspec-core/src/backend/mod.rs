//! Pluggable LLM generation and tool invocation.
//!
//! The engine talks to models through [`LlmBackend`]: a deterministic
//! scripted mock for tests and conformance runs, and an OpenAI-compatible
//! HTTP client for real endpoints. Tool execution covers the server registry
//! and remote HTTP tools; client tools are handled by engine suspension, and
//! MCP tools are a declared extension point that fails explicitly.

mod http;
mod mock;
mod tools;

pub use http::HttpLlmBackend;
pub use mock::{MockBackend, MockMatcher, MockRule, MockScript};
pub use tools::{
    conform_tool_outputs, http_text_request, invoke_remote_tool, invoke_server_tool, tool_spec,
    ToolFn, ToolRegistry,
};

use serde_json::{Map, Value};
use thiserror::Error;

use crate::model::{LlmConfig, Message};

/// Environment variable holding the bearer token for HTTP endpoints.
pub const API_TOKEN_ENV: &str = "AGENTSPEC_API_TOKEN";

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("mock script exhausted: no rule matches call #{call_index}")]
    ScriptExhausted { call_index: usize },
    #[error("http error{}: {message}", status.map(|s| format!(" (status {s})")).unwrap_or_default())]
    Http { status: Option<u16>, message: String },
    #[error("malformed model output: {reason}")]
    MalformedModelOutput { reason: String },
    #[error("unsupported LLM config: {reason}")]
    UnsupportedConfig { reason: String },
    #[error("tool `{name}` is not registered")]
    ToolNotFound { name: String },
    #[error("tool `{name}` argument mismatch: {reason}")]
    ArgsSchemaMismatch { name: String, reason: String },
    #[error("tool `{name}` output mismatch: {reason}")]
    OutputSchemaMismatch { name: String, reason: String },
    #[error("tool `{name}` failed: {message}")]
    ToolRaised { name: String, message: String },
    #[error("invalid mock script: {reason}")]
    InvalidScript { reason: String },
}

impl BackendError {
    pub fn http_status(&self) -> Option<u16> {
        match self {
            BackendError::Http { status, .. } => *status,
            _ => None,
        }
    }
}

/// Normalized model output: plain text, a tool call, or structured final
/// outputs.
#[derive(Debug, Clone, PartialEq)]
pub enum LlmResponse {
    Text {
        content: String,
    },
    ToolCall {
        /// Provider-assigned id, when one exists. The engine issues its own
        /// session-scoped call ids for suspension bookkeeping.
        call_id: Option<String>,
        tool_name: String,
        arguments: Map<String, Value>,
    },
    FinalOutputs {
        values: Map<String, Value>,
    },
}

impl LlmResponse {
    pub fn text(content: impl Into<String>) -> LlmResponse {
        LlmResponse::Text {
            content: content.into(),
        }
    }

    pub fn tool_call(tool_name: impl Into<String>, arguments: Map<String, Value>) -> LlmResponse {
        LlmResponse::ToolCall {
            call_id: None,
            tool_name: tool_name.into(),
            arguments,
        }
    }

    pub fn final_outputs(values: Map<String, Value>) -> LlmResponse {
        LlmResponse::FinalOutputs { values }
    }
}

/// A tool signature as advertised to the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    /// JSON-schema object describing the arguments.
    pub parameters: Value,
}

/// One text-generation backend. Implementations own any per-session state
/// (the mock script cursor); a backend instance belongs to one session.
pub trait LlmBackend: Send {
    fn generate(
        &mut self,
        config: &LlmConfig,
        messages: &[Message],
        tools: &[ToolSpec],
    ) -> Result<LlmResponse, BackendError>;
}

/// Decodes the structured-output protocol for models without native function
/// calling: a single (optionally fenced) JSON object of the form
/// `{"tool": name, "args": {...}}` or `{"final": {...}}`. Anything else is
/// plain text.
pub fn parse_structured_response(text: &str) -> LlmResponse {
    let trimmed = text.trim();
    let candidate = strip_fence(trimmed);
    if let Ok(Value::Object(object)) = serde_json::from_str::<Value>(candidate) {
        let keys: Vec<&str> = object.keys().map(String::as_str).collect();
        if keys.iter().all(|k| *k == "tool" || *k == "args") && object.contains_key("tool") {
            if let Some(name) = object.get("tool").and_then(Value::as_str) {
                if !name.is_empty() {
                    let arguments = match object.get("args") {
                        Some(Value::Object(args)) => args.clone(),
                        None => Map::new(),
                        Some(_) => return LlmResponse::text(text),
                    };
                    return LlmResponse::tool_call(name, arguments);
                }
            }
        }
        if keys == ["final"] {
            if let Some(Value::Object(values)) = object.get("final") {
                return LlmResponse::final_outputs(values.clone());
            }
        }
    }
    LlmResponse::text(text)
}

fn strip_fence(text: &str) -> &str {
    let Some(rest) = text.strip_prefix("```") else {
        return text;
    };
    let Some(body) = rest.strip_suffix("```") else {
        return text;
    };
    // drop an optional language tag on the opening fence
    match body.find('\n') {
        Some(newline) => body[newline + 1..].trim(),
        None => body.trim(),
    }
}
