//! OpenAI-compatible HTTP backend.
//!
//! Targets `{url}/v1/chat/completions`-shaped endpoints with the model id,
//! message history, and tool signatures from the config. Native tool calls
//! are used when the endpoint returns them; otherwise plain content is run
//! through the fenced-JSON structured protocol.

use serde_json::{Map, Value};

use super::{parse_structured_response, BackendError, LlmBackend, LlmResponse, ToolSpec};
use crate::model::{LlmConfig, LlmConfigVariant, Message, Role};

pub struct HttpLlmBackend {
    agent: ureq::Agent,
    api_token: Option<String>,
}

impl Default for HttpLlmBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl HttpLlmBackend {
    /// Reads the auth token from the `AGENTSPEC_API_TOKEN` environment
    /// variable when present.
    pub fn new() -> HttpLlmBackend {
        Self::with_token(std::env::var(super::API_TOKEN_ENV).ok())
    }

    pub fn with_token(api_token: Option<String>) -> HttpLlmBackend {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(std::time::Duration::from_secs(120)))
            .build()
            .into();
        HttpLlmBackend { agent, api_token }
    }

    fn wire_role(role: Role) -> &'static str {
        match role {
            Role::System => "system",
            Role::Agent => "assistant",
            Role::User => "user",
            Role::Tool => "tool",
        }
    }

    fn request_body(config: &LlmConfig, model_id: &str, messages: &[Message], tools: &[ToolSpec]) -> Value {
        let mut body = Map::new();
        body.insert("model".into(), Value::String(model_id.to_string()));
        body.insert(
            "messages".into(),
            Value::Array(
                messages
                    .iter()
                    .map(|m| {
                        let mut entry = Map::new();
                        entry.insert("content".into(), Value::String(m.content.clone()));
                        entry.insert("role".into(), Value::String(Self::wire_role(m.role).into()));
                        Value::Object(entry)
                    })
                    .collect(),
            ),
        );
        if let Some(temperature) = config.temperature {
            body.insert("temperature".into(), serde_json::json!(temperature));
        }
        if let Some(max_tokens) = config.max_tokens {
            body.insert("max_tokens".into(), serde_json::json!(max_tokens));
        }
        if !tools.is_empty() {
            body.insert(
                "tools".into(),
                Value::Array(
                    tools
                        .iter()
                        .map(|t| {
                            let mut function = Map::new();
                            function.insert("description".into(), Value::String(t.description.clone()));
                            function.insert("name".into(), Value::String(t.name.clone()));
                            function.insert("parameters".into(), t.parameters.clone());
                            let mut entry = Map::new();
                            entry.insert("function".into(), Value::Object(function));
                            entry.insert("type".into(), Value::String("function".into()));
                            Value::Object(entry)
                        })
                        .collect(),
                ),
            );
        }
        Value::Object(body)
    }

    fn normalize(response_body: &str) -> Result<LlmResponse, BackendError> {
        let malformed = |reason: &str| BackendError::MalformedModelOutput {
            reason: reason.to_string(),
        };
        let parsed: Value =
            serde_json::from_str(response_body).map_err(|_| malformed("response is not JSON"))?;
        let message = parsed
            .get("choices")
            .and_then(Value::as_array)
            .and_then(|choices| choices.first())
            .and_then(|choice| choice.get("message"))
            .ok_or_else(|| malformed("missing choices[0].message"))?;

        if let Some(call) = message
            .get("tool_calls")
            .and_then(Value::as_array)
            .and_then(|calls| calls.first())
        {
            let function = call
                .get("function")
                .ok_or_else(|| malformed("tool call without function"))?;
            let name = function
                .get("name")
                .and_then(Value::as_str)
                .filter(|n| !n.is_empty())
                .ok_or_else(|| malformed("tool call without name"))?;
            let arguments = match function.get("arguments") {
                Some(Value::String(raw)) => match serde_json::from_str::<Value>(raw) {
                    Ok(Value::Object(args)) => args,
                    _ => return Err(malformed("tool call arguments are not a JSON object")),
                },
                Some(Value::Object(args)) => args.clone(),
                _ => Map::new(),
            };
            return Ok(LlmResponse::ToolCall {
                call_id: call
                    .get("id")
                    .and_then(Value::as_str)
                    .map(str::to_string),
                tool_name: name.to_string(),
                arguments,
            });
        }

        match message.get("content").and_then(Value::as_str) {
            Some(content) => Ok(parse_structured_response(content)),
            None => Err(malformed("message without content")),
        }
    }
}

impl LlmBackend for HttpLlmBackend {
    fn generate(
        &mut self,
        config: &LlmConfig,
        messages: &[Message],
        tools: &[ToolSpec],
    ) -> Result<LlmResponse, BackendError> {
        let LlmConfigVariant::Vllm { url, model_id } = &config.variant else {
            return Err(BackendError::UnsupportedConfig {
                reason: "the HTTP backend requires an endpoint config with a url and model id"
                    .to_string(),
            });
        };
        let endpoint = format!("{}/v1/chat/completions", url.trim_end_matches('/'));
        let body = Self::request_body(config, model_id, messages, tools);

        let mut request = self
            .agent
            .post(&endpoint)
            .header("content-type", "application/json");
        if let Some(token) = &self.api_token {
            request = request.header("authorization", &format!("Bearer {token}"));
        }
        let mut response = request
            .send(body.to_string())
            .map_err(|e| BackendError::Http {
                status: None,
                message: e.to_string(),
            })?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Http {
                status: Some(status),
                message: e.to_string(),
            })?;
        if !(200..300).contains(&status) {
            return Err(BackendError::Http {
                status: Some(status),
                message: text.chars().take(200).collect(),
            });
        }
        Self::normalize(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn normalizes_native_tool_calls() {
        let body = json!({
            "choices": [{"message": {
                "tool_calls": [{
                    "id": "call_abc",
                    "function": {"name": "search", "arguments": "{\"q\":\"x\"}"}
                }]
            }}]
        })
        .to_string();
        match HttpLlmBackend::normalize(&body).unwrap() {
            LlmResponse::ToolCall {
                call_id,
                tool_name,
                arguments,
            } => {
                assert_eq!(call_id.as_deref(), Some("call_abc"));
                assert_eq!(tool_name, "search");
                assert_eq!(arguments.get("q"), Some(&json!("x")));
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn normalizes_content_through_structured_protocol() {
        let body = json!({
            "choices": [{"message": {"content": "{\"final\":{\"answer\":\"Paris\"}}"}}]
        })
        .to_string();
        match HttpLlmBackend::normalize(&body).unwrap() {
            LlmResponse::FinalOutputs { values } => {
                assert_eq!(values.get("answer"), Some(&json!("Paris")));
            }
            other => panic!("unexpected: {other:?}"),
        }
        let body = json!({"choices": [{"message": {"content": "hello"}}]}).to_string();
        assert_eq!(
            HttpLlmBackend::normalize(&body).unwrap(),
            LlmResponse::text("hello")
        );
    }

    #[test]
    fn malformed_payloads_are_rejected() {
        assert!(matches!(
            HttpLlmBackend::normalize("not json"),
            Err(BackendError::MalformedModelOutput { .. })
        ));
        assert!(matches!(
            HttpLlmBackend::normalize("{\"choices\": []}"),
            Err(BackendError::MalformedModelOutput { .. })
        ));
    }

    #[test]
    fn generic_config_is_unsupported_over_http() {
        let mut backend = HttpLlmBackend::with_token(None);
        let err = backend
            .generate(&LlmConfig::generic(), &[], &[])
            .unwrap_err();
        assert!(matches!(err, BackendError::UnsupportedConfig { .. }));
    }
}
