//! Tool invocation: the host-provided server registry and remote HTTP tools.
//!
//! Results are validated against the declared output schemas before they
//! reach the engine ledger.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{Map, Value};

use super::{BackendError, ToolSpec};
use crate::model::{HttpMethod, Tool, ToolKind};
use crate::property::{value_conforms, Property};

pub type ToolFn = Arc<dyn Fn(&Map<String, Value>) -> Result<Map<String, Value>, String> + Send + Sync>;

/// Host-provided callables for server tools, keyed by tool name. The
/// declared I/O schemas live on the tool component; invocation validates
/// against them.
#[derive(Clone, Default)]
pub struct ToolRegistry {
    tools: BTreeMap<String, ToolFn>,
}

impl ToolRegistry {
    pub fn new() -> ToolRegistry {
        ToolRegistry::default()
    }

    pub fn register(
        &mut self,
        name: impl Into<String>,
        f: impl Fn(&Map<String, Value>) -> Result<Map<String, Value>, String> + Send + Sync + 'static,
    ) {
        self.tools.insert(name.into(), Arc::new(f));
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tools.contains_key(name)
    }

    fn get(&self, name: &str) -> Option<&ToolFn> {
        self.tools.get(name)
    }
}

/// Builds the signature advertised to models for a tool component.
pub fn tool_spec(name: &str, description: Option<&str>, tool: &Tool) -> ToolSpec {
    let mut properties = Map::new();
    let mut required = Vec::new();
    for prop in &tool.inputs {
        properties.insert(prop.name().to_string(), prop.to_value());
        if prop.default_value().is_none() {
            required.push(Value::String(prop.name().to_string()));
        }
    }
    let mut parameters = Map::new();
    parameters.insert("properties".into(), Value::Object(properties));
    parameters.insert("required".into(), Value::Array(required));
    parameters.insert("type".into(), Value::String("object".into()));
    ToolSpec {
        name: name.to_string(),
        description: description.unwrap_or_default().to_string(),
        parameters: Value::Object(parameters),
    }
}

/// Checks args against declared inputs, filling defaults. Unknown and
/// mistyped arguments are rejected.
fn conform_args(
    name: &str,
    inputs: &[Property],
    args: &Map<String, Value>,
) -> Result<Map<String, Value>, BackendError> {
    let mismatch = |reason: String| BackendError::ArgsSchemaMismatch {
        name: name.to_string(),
        reason,
    };
    for key in args.keys() {
        if !inputs.iter().any(|p| p.name() == key) {
            return Err(mismatch(format!("unexpected argument `{key}`")));
        }
    }
    let mut conformed = Map::new();
    for prop in inputs {
        match args.get(prop.name()) {
            Some(value) => {
                if !value_conforms(value, prop.type_kind()) {
                    return Err(mismatch(format!(
                        "argument `{}` must be {}",
                        prop.name(),
                        prop.type_kind()
                    )));
                }
                conformed.insert(prop.name().to_string(), value.clone());
            }
            None => match prop.default_value() {
                Some(default) => {
                    conformed.insert(prop.name().to_string(), default.clone());
                }
                None => {
                    return Err(mismatch(format!("missing argument `{}`", prop.name())));
                }
            },
        }
    }
    Ok(conformed)
}

/// Checks a result dictionary against declared outputs: every declared
/// output present and conforming, nothing else.
pub fn conform_tool_outputs(
    name: &str,
    outputs: &[Property],
    result: &Map<String, Value>,
) -> Result<Map<String, Value>, BackendError> {
    let mismatch = |reason: String| BackendError::OutputSchemaMismatch {
        name: name.to_string(),
        reason,
    };
    for key in result.keys() {
        if !outputs.iter().any(|p| p.name() == key) {
            return Err(mismatch(format!("unexpected output `{key}`")));
        }
    }
    let mut conformed = Map::new();
    for prop in outputs {
        match result.get(prop.name()) {
            Some(value) => {
                if !value_conforms(value, prop.type_kind()) {
                    return Err(mismatch(format!(
                        "output `{}` must be {}",
                        prop.name(),
                        prop.type_kind()
                    )));
                }
                conformed.insert(prop.name().to_string(), value.clone());
            }
            None => return Err(mismatch(format!("missing output `{}`", prop.name()))),
        }
    }
    Ok(conformed)
}

/// Invokes a registered server tool in-process.
pub fn invoke_server_tool(
    registry: &ToolRegistry,
    name: &str,
    tool: &Tool,
    args: &Map<String, Value>,
) -> Result<Map<String, Value>, BackendError> {
    let callable = registry.get(name).ok_or_else(|| BackendError::ToolNotFound {
        name: name.to_string(),
    })?;
    let args = conform_args(name, &tool.inputs, args)?;
    let result = callable(&args).map_err(|message| BackendError::ToolRaised {
        name: name.to_string(),
        message,
    })?;
    conform_tool_outputs(name, &tool.outputs, &result)
}

/// Invokes a remote tool over HTTP: args travel as query parameters for
/// GET/DELETE and as a JSON body for POST/PUT; the JSON object response is
/// bound to the declared outputs.
pub fn invoke_remote_tool(
    agent: &ureq::Agent,
    name: &str,
    tool: &Tool,
    args: &Map<String, Value>,
) -> Result<Map<String, Value>, BackendError> {
    let ToolKind::Remote {
        url,
        http_method,
        headers,
    } = &tool.kind
    else {
        return Err(BackendError::ToolNotFound {
            name: name.to_string(),
        });
    };
    let args = conform_args(name, &tool.inputs, args)?;
    let body = perform_json_request(agent, *http_method, url, headers, Some(&args))?;
    let parsed: Value = serde_json::from_str(&body).map_err(|_| BackendError::OutputSchemaMismatch {
        name: name.to_string(),
        reason: "response is not JSON".to_string(),
    })?;
    let object = match parsed {
        Value::Object(o) => o,
        _ => {
            return Err(BackendError::OutputSchemaMismatch {
                name: name.to_string(),
                reason: "response is not a JSON object".to_string(),
            })
        }
    };
    conform_tool_outputs(name, &tool.outputs, &object)
}

/// Shared HTTP plumbing for remote tools and API nodes. Returns the body of
/// a 2xx response; other statuses and transport failures map to
/// [`BackendError::Http`].
pub(crate) fn perform_json_request(
    agent: &ureq::Agent,
    method: HttpMethod,
    url: &str,
    headers: &BTreeMap<String, String>,
    args: Option<&Map<String, Value>>,
) -> Result<String, BackendError> {
    let (status, body) = perform_raw_request(agent, method, url, headers, args)?;
    if !(200..300).contains(&status) {
        return Err(BackendError::Http {
            status: Some(status),
            message: truncate(&body),
        });
    }
    Ok(body)
}

/// Like [`perform_json_request`] but surfaces every HTTP status to the
/// caller; only transport failures are errors.
pub(crate) fn perform_raw_request(
    agent: &ureq::Agent,
    method: HttpMethod,
    url: &str,
    headers: &BTreeMap<String, String>,
    args: Option<&Map<String, Value>>,
) -> Result<(u16, String), BackendError> {
    match method {
        HttpMethod::Get | HttpMethod::Delete => {
            let full_url = match args {
                Some(args) if !args.is_empty() => format!("{url}?{}", encode_query(args)),
                _ => url.to_string(),
            };
            http_text_request(agent, method, &full_url, headers, None)
        }
        HttpMethod::Post | HttpMethod::Put => {
            let payload = Value::Object(args.cloned().unwrap_or_default()).to_string();
            http_text_request(agent, method, url, headers, Some(&payload))
        }
    }
}

/// Lowest-level HTTP primitive: a request with an optional raw JSON body.
/// Every status is data; only transport failures are errors.
pub fn http_text_request(
    agent: &ureq::Agent,
    method: HttpMethod,
    url: &str,
    headers: &BTreeMap<String, String>,
    body: Option<&str>,
) -> Result<(u16, String), BackendError> {
    let transport = |e: ureq::Error| BackendError::Http {
        status: None,
        message: e.to_string(),
    };
    let mut response = match method {
        HttpMethod::Get | HttpMethod::Delete => {
            let mut request = match method {
                HttpMethod::Get => agent.get(url),
                _ => agent.delete(url),
            };
            for (k, v) in headers {
                request = request.header(k, v);
            }
            request.call().map_err(transport)?
        }
        HttpMethod::Post | HttpMethod::Put => {
            let mut request = match method {
                HttpMethod::Post => agent.post(url),
                _ => agent.put(url),
            };
            for (k, v) in headers {
                request = request.header(k, v);
            }
            request
                .header("content-type", "application/json")
                .send(body.unwrap_or_default())
                .map_err(transport)?
        }
    };
    let status = response.status().as_u16();
    let text = response
        .body_mut()
        .read_to_string()
        .map_err(|e| BackendError::Http {
            status: Some(status),
            message: e.to_string(),
        })?;
    Ok((status, text))
}

fn encode_query(args: &Map<String, Value>) -> String {
    args.iter()
        .map(|(k, v)| {
            let text = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            format!("{}={}", urlencode(k), urlencode(&text))
        })
        .collect::<Vec<_>>()
        .join("&")
}

fn urlencode(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for byte in s.bytes() {
        match byte {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => {
                out.push(byte as char)
            }
            _ => out.push_str(&format!("%{byte:02X}")),
        }
    }
    out
}

fn truncate(s: &str) -> String {
    const LIMIT: usize = 200;
    if s.len() <= LIMIT {
        s.to_string()
    } else {
        format!("{}…", &s[..s.floor_char_boundary(LIMIT)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn doubler_tool() -> Tool {
        Tool {
            inputs: vec![Property::integer("x")],
            outputs: vec![Property::integer("y")],
            kind: ToolKind::Server,
        }
    }

    fn registry_with_doubler() -> ToolRegistry {
        let mut registry = ToolRegistry::new();
        registry.register("double", |args: &Map<String, Value>| {
            let x = args.get("x").and_then(Value::as_i64).ok_or("missing x")?;
            let mut out = Map::new();
            out.insert("y".into(), json!(x * 2));
            Ok(out)
        });
        registry
    }

    fn args(pairs: &[(&str, Value)]) -> Map<String, Value> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn registered_tool_runs_and_binds_outputs() {
        let registry = registry_with_doubler();
        let result =
            invoke_server_tool(&registry, "double", &doubler_tool(), &args(&[("x", json!(2))]))
                .unwrap();
        // oracle: the registered callable invoked directly
        assert_eq!(result.get("y"), Some(&json!(4)));
    }

    #[test]
    fn unregistered_tool_is_not_found() {
        let registry = ToolRegistry::new();
        let err =
            invoke_server_tool(&registry, "double", &doubler_tool(), &args(&[("x", json!(2))]))
                .unwrap_err();
        assert!(matches!(err, BackendError::ToolNotFound { .. }));
    }

    #[test]
    fn mistyped_args_are_rejected() {
        let registry = registry_with_doubler();
        let err = invoke_server_tool(
            &registry,
            "double",
            &doubler_tool(),
            &args(&[("x", json!("two"))]),
        )
        .unwrap_err();
        assert!(matches!(err, BackendError::ArgsSchemaMismatch { .. }));
    }

    #[test]
    fn defaults_fill_missing_args() {
        let mut registry = ToolRegistry::new();
        registry.register("greet", |args: &Map<String, Value>| {
            let name = args.get("name").and_then(Value::as_str).unwrap_or("?");
            let mut out = Map::new();
            out.insert("text".into(), json!(format!("hi {name}")));
            Ok(out)
        });
        let tool = Tool {
            inputs: vec![Property::string("name").with_default(json!("world"))],
            outputs: vec![Property::string("text")],
            kind: ToolKind::Server,
        };
        let result = invoke_server_tool(&registry, "greet", &tool, &Map::new()).unwrap();
        assert_eq!(result.get("text"), Some(&json!("hi world")));
    }

    #[test]
    fn result_must_match_declared_outputs() {
        let mut registry = ToolRegistry::new();
        registry.register("bad", |_args: &Map<String, Value>| {
            let mut out = Map::new();
            out.insert("z".into(), json!(1));
            Ok(out)
        });
        let tool = Tool {
            inputs: vec![],
            outputs: vec![Property::integer("y")],
            kind: ToolKind::Server,
        };
        let err = invoke_server_tool(&registry, "bad", &tool, &Map::new()).unwrap_err();
        assert!(matches!(err, BackendError::OutputSchemaMismatch { .. }));
    }

    #[test]
    fn tool_raised_errors_are_wrapped() {
        let mut registry = ToolRegistry::new();
        registry.register("boom", |_args: &Map<String, Value>| Err("kaput".to_string()));
        let tool = Tool {
            inputs: vec![],
            outputs: vec![],
            kind: ToolKind::Server,
        };
        let err = invoke_server_tool(&registry, "boom", &tool, &Map::new()).unwrap_err();
        match err {
            BackendError::ToolRaised { message, .. } => assert_eq!(message, "kaput"),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn tool_spec_required_lists_inputs_without_defaults() {
        let tool = Tool {
            inputs: vec![
                Property::string("q"),
                Property::integer("limit").with_default(json!(10)),
            ],
            outputs: vec![],
            kind: ToolKind::Server,
        };
        let spec = tool_spec("search", Some("find things"), &tool);
        assert_eq!(spec.parameters["required"], json!(["q"]));
        assert_eq!(spec.parameters["type"], json!("object"));
    }

    #[test]
    fn query_encoding() {
        let mut map = Map::new();
        map.insert("q".into(), json!("a b"));
        map.insert("n".into(), json!(3));
        assert_eq!(encode_query(&map), "n=3&q=a%20b");
    }
}
