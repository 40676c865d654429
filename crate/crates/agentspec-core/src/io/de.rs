//! Deserializer: lifts raw JSON/YAML into a resolved [`SpecDocument`].
//!
//! Resolution runs in two passes. The first walks the component tree,
//! declaring every expanded object and recording `$component_ref:` strings
//! as symbolic ids; forward references are therefore accepted. The second
//! pass (document integrity) verifies that every reference names a declared
//! component of the right kind.

use std::collections::BTreeMap;

use serde_json::{Map, Value};

use super::plugin::{is_builtin_component_type, PluginRegistry};
use super::{Format, COMPONENT_REF_PREFIX};
use crate::diagnostics::{Diagnostic, DiagnosticCode, DOCUMENT_TARGET};
use crate::document::{DocumentBuilder, DocumentError, SpecDocument, SUPPORTED_VERSION};
use crate::model::{
    Agent, Component, ComponentHeader, ComponentId, ComponentKind, ControlFlowEdge, DataFlowEdge,
    Flow, HttpMethod, LlmConfig, LlmConfigVariant, Node, NodeKind, Tool, ToolKind,
    DEFAULT_MAX_TURNS,
};
use crate::property::Property;

/// A deserialized document plus non-fatal findings (e.g. version skew).
#[derive(Debug)]
pub struct Deserialized {
    pub document: SpecDocument,
    pub warnings: Vec<Diagnostic>,
}

pub fn deserialize(text: &str, format: Format) -> Result<Deserialized, DocumentError> {
    deserialize_impl(text, format, None)
}

pub fn deserialize_with_plugins(
    text: &str,
    format: Format,
    plugins: &PluginRegistry,
) -> Result<Deserialized, DocumentError> {
    deserialize_impl(text, format, Some(plugins))
}

fn deserialize_impl(
    text: &str,
    format: Format,
    plugins: Option<&PluginRegistry>,
) -> Result<Deserialized, DocumentError> {
    let value = parse_text(text, format)?;
    let mut top = match value {
        Value::Object(o) => o,
        _ => {
            return Err(DocumentError::malformed(
                DOCUMENT_TARGET,
                "top level must be an object",
            ))
        }
    };

    let version = match top.remove("agentspec_version") {
        Some(Value::String(v)) => v,
        Some(_) => {
            return Err(DocumentError::malformed(
                DOCUMENT_TARGET,
                "`agentspec_version` must be a string",
            ))
        }
        None => return Err(DocumentError::MissingVersion),
    };

    let mut warnings = Vec::new();
    if version != SUPPORTED_VERSION {
        warnings.push(Diagnostic::new(
            DiagnosticCode::VersionMismatch,
            DOCUMENT_TARGET,
            format!("document declares version `{version}`, this runtime targets `{SUPPORTED_VERSION}`"),
        ));
    }

    let mut lifter = Lifter {
        builder: DocumentBuilder::with_version(version),
        plugins,
    };
    let root = lifter.lift_object(top, "root")?;
    let document = lifter.builder.finish(root)?;
    Ok(Deserialized { document, warnings })
}

fn parse_text(text: &str, format: Format) -> Result<Value, DocumentError> {
    match format {
        Format::Json => serde_json::from_str(text).map_err(|e| DocumentError::Parse {
            format: "json",
            reason: e.to_string(),
        }),
        Format::Yaml => serde_yaml::from_str(text).map_err(|e| DocumentError::Parse {
            format: "yaml",
            reason: e.to_string(),
        }),
    }
}

struct Lifter<'a> {
    builder: DocumentBuilder,
    plugins: Option<&'a PluginRegistry>,
}

impl Lifter<'_> {
    /// Accepts either a `$component_ref:` string or an expanded object.
    fn lift(&mut self, value: Value, context: &str) -> Result<ComponentId, DocumentError> {
        match value {
            Value::String(s) => match s.strip_prefix(COMPONENT_REF_PREFIX) {
                Some(id) if !id.is_empty() => Ok(ComponentId::new(id)),
                _ => Err(DocumentError::malformed(
                    context,
                    format!("expected a component or `{COMPONENT_REF_PREFIX}<id>`, got `{s}`"),
                )),
            },
            Value::Object(o) => self.lift_object(o, context),
            other => Err(DocumentError::malformed(
                context,
                format!("expected a component, got {}", kind_of(&other)),
            )),
        }
    }

    fn lift_object(
        &mut self,
        object: Map<String, Value>,
        context: &str,
    ) -> Result<ComponentId, DocumentError> {
        let mut fields = Fields {
            map: object,
            context: context.to_string(),
        };
        let component_type = fields.take_string("component_type")?;
        let id = fields.take_string("id")?;
        fields.context = format!("{component_type} `{id}`");
        let name = fields.take_string("name")?;
        let description = fields.take_opt_string("description")?;
        let metadata = match fields.take_value("metadata") {
            None | Some(Value::Null) => None,
            Some(Value::Object(m)) => Some(m),
            Some(other) => {
                return Err(fields.malformed(format!(
                    "`metadata` must be an object or null, got {}",
                    kind_of(&other)
                )))
            }
        };

        let kind = self.lift_kind(&component_type, &mut fields)?;
        fields.reject_leftovers()?;

        let header = ComponentHeader {
            id: ComponentId::new(id),
            name,
            description,
            metadata,
        };
        self.builder.insert(Component { header, kind })
    }

    fn lift_kind(
        &mut self,
        component_type: &str,
        fields: &mut Fields,
    ) -> Result<ComponentKind, DocumentError> {
        let kind = match component_type {
            "Agent" => {
                let llm_config = match fields.take_value("llm_config") {
                    None | Some(Value::Null) => None,
                    Some(v) => Some(self.lift(v, &fields.context.clone())?),
                };
                let tools = self.lift_list(fields, "tools")?;
                let max_turns = match fields.take_opt_u64("max_turns")? {
                    None => DEFAULT_MAX_TURNS,
                    Some(0) => return Err(fields.malformed("`max_turns` must be positive")),
                    Some(n) => u32::try_from(n)
                        .map_err(|_| fields.malformed("`max_turns` out of range"))?,
                };
                ComponentKind::Agent(Agent {
                    llm_config,
                    tools,
                    instructions: fields.take_string("instructions")?,
                    inputs: fields.take_properties("inputs")?,
                    outputs: fields.take_properties("outputs")?,
                    max_turns,
                })
            }
            "LlmConfig" => ComponentKind::LlmConfig(LlmConfig {
                temperature: fields.take_opt_f64("temperature")?,
                max_tokens: fields.take_opt_u64("max_tokens")?,
                variant: LlmConfigVariant::Generic,
            }),
            "VllmConfig" => {
                let url = fields.take_string("url")?;
                if url.is_empty() {
                    return Err(fields.malformed("`url` must be non-empty"));
                }
                ComponentKind::LlmConfig(LlmConfig {
                    temperature: fields.take_opt_f64("temperature")?,
                    max_tokens: fields.take_opt_u64("max_tokens")?,
                    variant: LlmConfigVariant::Vllm {
                        url,
                        model_id: fields.take_string("model_id")?,
                    },
                })
            }
            "ServerTool" | "ClientTool" | "RemoteTool" | "MCPTool" => {
                let inputs = fields.take_properties("inputs")?;
                let outputs = fields.take_properties("outputs")?;
                let kind = match component_type {
                    "ServerTool" => ToolKind::Server,
                    "ClientTool" => ToolKind::Client,
                    "RemoteTool" => {
                        let url = fields.take_string("url")?;
                        if url.is_empty() {
                            return Err(fields.malformed("`url` must be non-empty"));
                        }
                        ToolKind::Remote {
                            url,
                            http_method: fields.take_http_method("http_method")?,
                            headers: fields.take_string_map("headers")?,
                        }
                    }
                    _ => ToolKind::Mcp {
                        server_ref: fields.take_string("server_ref")?,
                    },
                };
                ComponentKind::Tool(Tool {
                    inputs,
                    outputs,
                    kind,
                })
            }
            "Flow" => {
                let context = fields.context.clone();
                let start_value = fields.take_required("start_node")?;
                let start_node = self.lift(start_value, &context)?;
                let nodes = self.lift_list(fields, "nodes")?;
                let control_flow_connections = self.lift_list(fields, "control_flow_connections")?;
                let data_flow_connections = match fields.take_value("data_flow_connections") {
                    None | Some(Value::Null) => None,
                    Some(Value::Array(items)) => {
                        let mut ids = Vec::with_capacity(items.len());
                        for item in items {
                            ids.push(self.lift(item, &context)?);
                        }
                        Some(ids)
                    }
                    Some(other) => {
                        return Err(fields.malformed(format!(
                            "`data_flow_connections` must be a list or null, got {}",
                            kind_of(&other)
                        )))
                    }
                };
                ComponentKind::Flow(Flow {
                    start_node,
                    nodes,
                    control_flow_connections,
                    data_flow_connections,
                    inputs: fields.take_properties("inputs")?,
                    outputs: fields.take_properties("outputs")?,
                })
            }
            "ControlFlowEdge" => {
                let context = fields.context.clone();
                let from = fields.take_required("from_node")?;
                let to = fields.take_required("to_node")?;
                ComponentKind::ControlFlowEdge(ControlFlowEdge {
                    from_node: self.lift(from, &context)?,
                    from_branch: fields.take_opt_string("from_branch")?,
                    to_node: self.lift(to, &context)?,
                })
            }
            "DataFlowEdge" => {
                let context = fields.context.clone();
                let source = fields.take_required("source_node")?;
                let destination = fields.take_required("destination_node")?;
                ComponentKind::DataFlowEdge(DataFlowEdge {
                    source_node: self.lift(source, &context)?,
                    source_output: fields.take_string("source_output")?,
                    destination_node: self.lift(destination, &context)?,
                    destination_input: fields.take_string("destination_input")?,
                })
            }
            ty if is_node_type(ty) => {
                let inputs = fields.take_properties("inputs")?;
                let outputs = fields.take_properties("outputs")?;
                let kind = self.lift_node_kind(ty, fields)?;
                ComponentKind::Node(Node {
                    inputs,
                    outputs,
                    kind,
                })
            }
            other => {
                debug_assert!(!is_builtin_component_type(other));
                let plugin = self
                    .plugins
                    .and_then(|p| p.plugin_for(other))
                    .ok_or_else(|| DocumentError::UnknownComponentType {
                        component_type: other.to_string(),
                        id: fields
                            .context
                            .rsplit('`')
                            .nth(1)
                            .unwrap_or_default()
                            .to_string(),
                    })?;
                let payload = std::mem::take(&mut fields.map);
                let ext = plugin.deserialize(other, &payload)?;
                if ext.component_type != other {
                    return Err(fields.malformed(format!(
                        "plugin returned component type `{}` for `{other}`",
                        ext.component_type
                    )));
                }
                for key in ext.payload.keys() {
                    if is_base_field(key) {
                        return Err(fields
                            .malformed(format!("plugin payload may not use base field `{key}`")));
                    }
                }
                ComponentKind::Extension(ext)
            }
        };
        Ok(kind)
    }

    fn lift_node_kind(
        &mut self,
        ty: &str,
        fields: &mut Fields,
    ) -> Result<NodeKind, DocumentError> {
        let context = fields.context.clone();
        let kind = match ty {
            "StartNode" => NodeKind::Start,
            "EndNode" => NodeKind::End,
            "LlmNode" => {
                let config = fields.take_required("llm_config")?;
                NodeKind::Llm {
                    llm_config: self.lift(config, &context)?,
                    prompt_template: fields.take_string("prompt_template")?,
                }
            }
            "ApiNode" => NodeKind::Api {
                url_template: fields.take_string("url_template")?,
                http_method: fields.take_http_method("http_method")?,
                headers: fields.take_string_map("headers")?,
                body_template: fields.take_opt_string("body_template")?,
            },
            "AgentNode" => {
                let agent = fields.take_required("agent")?;
                NodeKind::Agent {
                    agent: self.lift(agent, &context)?,
                }
            }
            "FlowNode" => {
                let flow = fields.take_required("flow")?;
                NodeKind::Flow {
                    flow: self.lift(flow, &context)?,
                }
            }
            "MapNode" => {
                let flow = fields.take_required("flow")?;
                NodeKind::Map {
                    flow: self.lift(flow, &context)?,
                    iterated_input: fields.take_string("iterated_input")?,
                }
            }
            "BranchingNode" => NodeKind::Branching {
                branch_input: fields.take_string("branch_input")?,
                mapping: fields.take_string_map("mapping")?,
            },
            "ToolNode" => {
                let tool = fields.take_required("tool")?;
                NodeKind::Tool {
                    tool: self.lift(tool, &context)?,
                }
            }
            "InputMessageNode" => NodeKind::InputMessage {
                message_template: fields.take_opt_string("message_template")?,
            },
            "OutputMessageNode" => NodeKind::OutputMessage {
                message_template: fields.take_string("message_template")?,
            },
            _ => unreachable!("guarded by is_node_type"),
        };
        Ok(kind)
    }

    fn lift_list(
        &mut self,
        fields: &mut Fields,
        key: &str,
    ) -> Result<Vec<ComponentId>, DocumentError> {
        let context = fields.context.clone();
        match fields.take_value(key) {
            None | Some(Value::Null) => Ok(Vec::new()),
            Some(Value::Array(items)) => {
                let mut ids = Vec::with_capacity(items.len());
                for item in items {
                    ids.push(self.lift(item, &context)?);
                }
                Ok(ids)
            }
            Some(other) => Err(DocumentError::malformed(
                context,
                format!("`{key}` must be a list, got {}", kind_of(&other)),
            )),
        }
    }
}

fn is_node_type(ty: &str) -> bool {
    matches!(
        ty,
        "StartNode"
            | "EndNode"
            | "LlmNode"
            | "ApiNode"
            | "AgentNode"
            | "FlowNode"
            | "MapNode"
            | "BranchingNode"
            | "ToolNode"
            | "InputMessageNode"
            | "OutputMessageNode"
    )
}

fn is_base_field(key: &str) -> bool {
    matches!(
        key,
        "component_type" | "id" | "name" | "description" | "metadata"
    )
}

fn kind_of(value: &Value) -> &'static str {
    match value {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "a list",
        Value::Object(_) => "an object",
    }
}

/// Field cursor over one serialized component. Consumed keys are removed;
/// anything left at the end is an unknown field and rejected.
struct Fields {
    map: Map<String, Value>,
    context: String,
}

impl Fields {
    fn malformed(&self, reason: impl std::fmt::Display) -> DocumentError {
        DocumentError::malformed(&self.context, reason)
    }

    fn take_value(&mut self, key: &str) -> Option<Value> {
        self.map.remove(key)
    }

    fn take_required(&mut self, key: &str) -> Result<Value, DocumentError> {
        self.map
            .remove(key)
            .ok_or_else(|| self.malformed(format!("missing required field `{key}`")))
    }

    fn take_string(&mut self, key: &str) -> Result<String, DocumentError> {
        match self.take_required(key)? {
            Value::String(s) => Ok(s),
            other => Err(self.malformed(format!(
                "`{key}` must be a string, got {}",
                kind_of(&other)
            ))),
        }
    }

    fn take_opt_string(&mut self, key: &str) -> Result<Option<String>, DocumentError> {
        match self.take_value(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(other) => Err(self.malformed(format!(
                "`{key}` must be a string or null, got {}",
                kind_of(&other)
            ))),
        }
    }

    fn take_opt_u64(&mut self, key: &str) -> Result<Option<u64>, DocumentError> {
        match self.take_value(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::Number(n)) if n.as_u64().is_some() => Ok(n.as_u64()),
            Some(other) => Err(self.malformed(format!(
                "`{key}` must be a non-negative integer, got {}",
                kind_of(&other)
            ))),
        }
    }

    fn take_opt_f64(&mut self, key: &str) -> Result<Option<f64>, DocumentError> {
        match self.take_value(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::Number(n)) => Ok(n.as_f64()),
            Some(other) => Err(self.malformed(format!(
                "`{key}` must be a number, got {}",
                kind_of(&other)
            ))),
        }
    }

    fn take_http_method(&mut self, key: &str) -> Result<HttpMethod, DocumentError> {
        let raw = self.take_string(key)?;
        HttpMethod::parse(&raw).ok_or_else(|| {
            self.malformed(format!(
                "`{key}` must be one of GET, POST, PUT, DELETE; got `{raw}`"
            ))
        })
    }

    fn take_properties(&mut self, key: &str) -> Result<Vec<Property>, DocumentError> {
        match self.take_value(key) {
            None | Some(Value::Null) => Ok(Vec::new()),
            Some(Value::Array(items)) => {
                let mut props = Vec::with_capacity(items.len());
                for item in items {
                    let prop = Property::new(item)
                        .map_err(|e| self.malformed(format!("in `{key}`: {e}")))?;
                    props.push(prop);
                }
                Ok(props)
            }
            Some(other) => Err(self.malformed(format!(
                "`{key}` must be a list of properties, got {}",
                kind_of(&other)
            ))),
        }
    }

    fn take_string_map(&mut self, key: &str) -> Result<BTreeMap<String, String>, DocumentError> {
        match self.take_value(key) {
            None | Some(Value::Null) => Ok(BTreeMap::new()),
            Some(Value::Object(o)) => {
                let mut map = BTreeMap::new();
                for (k, v) in o {
                    match v {
                        Value::String(s) => {
                            map.insert(k, s);
                        }
                        other => {
                            return Err(self.malformed(format!(
                                "`{key}.{k}` must be a string, got {}",
                                kind_of(&other)
                            )))
                        }
                    }
                }
                Ok(map)
            }
            Some(other) => Err(self.malformed(format!(
                "`{key}` must be an object, got {}",
                kind_of(&other)
            ))),
        }
    }

    fn reject_leftovers(&mut self) -> Result<(), DocumentError> {
        if let Some(key) = self.map.keys().next() {
            return Err(self.malformed(format!("unknown field `{key}`")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::serialize;

    fn minimal_doc(version: &str) -> String {
        format!(
            r#"{{
              "agentspec_version": "{version}",
              "component_type": "LlmConfig",
              "id": "cfg",
              "name": "cfg",
              "description": null,
              "metadata": null,
              "temperature": null,
              "max_tokens": null
            }}"#
        )
    }

    #[test]
    fn missing_version_is_an_error() {
        let text = r#"{"component_type": "LlmConfig", "id": "c", "name": "c"}"#;
        let err = deserialize(text, Format::Json).unwrap_err();
        assert!(matches!(err, DocumentError::MissingVersion));
    }

    #[test]
    fn other_versions_warn_but_parse() {
        let ok = deserialize(&minimal_doc("25.4.1"), Format::Json).unwrap();
        assert!(ok.warnings.is_empty());
        let skewed = deserialize(&minimal_doc("99.0.0"), Format::Json).unwrap();
        assert_eq!(skewed.warnings.len(), 1);
        assert_eq!(
            skewed.warnings[0].code,
            DiagnosticCode::VersionMismatch
        );
        assert_eq!(skewed.document.version(), "99.0.0");
    }

    #[test]
    fn dangling_reference_is_reported() {
        let text = r#"{
            "agentspec_version": "25.4.1",
            "component_type": "ControlFlowEdge",
            "id": "e", "name": "e", "from_branch": null,
            "from_node": "$component_ref:zzz",
            "to_node": "$component_ref:zzz"
        }"#;
        let err = deserialize(text, Format::Json).unwrap_err();
        match err {
            DocumentError::DanglingReference { id } => assert_eq!(id.as_str(), "zzz"),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn duplicate_expansion_is_reported() {
        let text = r#"{
            "agentspec_version": "25.4.1",
            "component_type": "ControlFlowEdge",
            "id": "e", "name": "e", "from_branch": null,
            "from_node": {"component_type": "StartNode", "id": "s", "name": "s"},
            "to_node":   {"component_type": "StartNode", "id": "s", "name": "s"}
        }"#;
        let err = deserialize(text, Format::Json).unwrap_err();
        assert!(matches!(err, DocumentError::DuplicateDeclaration { id } if id.as_str() == "s"));
    }

    #[test]
    fn forward_references_resolve() {
        // start_node is referenced before its expansion inside `nodes`.
        let text = r#"{
            "agentspec_version": "25.4.1",
            "component_type": "Flow",
            "id": "f", "name": "f",
            "start_node": "$component_ref:s",
            "nodes": [
                {"component_type": "StartNode", "id": "s", "name": "s"},
                {"component_type": "EndNode", "id": "e", "name": "e"}
            ],
            "control_flow_connections": [],
            "data_flow_connections": null,
            "inputs": [], "outputs": []
        }"#;
        let parsed = deserialize(text, Format::Json).unwrap();
        assert_eq!(parsed.document.len(), 3);
        let flow = parsed.document.root().as_flow().unwrap().clone();
        assert_eq!(flow.start_node.as_str(), "s");
        assert!(flow.is_name_based());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{
            "agentspec_version": "25.4.1",
            "component_type": "LlmConfig",
            "id": "c", "name": "c", "surprise": 1
        }"#;
        let err = deserialize(text, Format::Json).unwrap_err();
        assert!(err.to_string().contains("unknown field `surprise`"));
    }

    #[test]
    fn unknown_component_type_without_plugin() {
        let text = r#"{
            "agentspec_version": "25.4.1",
            "component_type": "MemoryStub",
            "id": "m", "name": "m", "capacity": 3
        }"#;
        let err = deserialize(text, Format::Json).unwrap_err();
        match err {
            DocumentError::UnknownComponentType { component_type, id } => {
                assert_eq!(component_type, "MemoryStub");
                assert_eq!(id, "m");
            }
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn yaml_parses_to_the_same_document() {
        let json_text = minimal_doc("25.4.1");
        let parsed = deserialize(&json_text, Format::Json).unwrap();
        let yaml_text = serialize(&parsed.document, Format::Yaml);
        let reparsed = deserialize(&yaml_text, Format::Yaml).unwrap();
        assert_eq!(parsed.document, reparsed.document);
    }

    #[test]
    fn malformed_yaml_is_a_parse_error() {
        let err = deserialize("{{{{:::", Format::Yaml).unwrap_err();
        assert!(matches!(err, DocumentError::Parse { format: "yaml", .. }));
    }
}
