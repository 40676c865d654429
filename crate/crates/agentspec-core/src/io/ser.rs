//! Canonical serializer.
//!
//! Components are expanded exactly once, at their first occurrence in the
//! depth-first walk that mirrors the emitted byte order (object fields in
//! sorted key order, list elements in definition order). Every later
//! occurrence serializes as `$component_ref:<id>`. Optional fields are
//! always present, `null` when absent, so a document has exactly one
//! canonical form.

use std::collections::BTreeSet;

use serde_json::{Map, Value};

use super::plugin::PluginRegistry;
use super::{Format, COMPONENT_REF_PREFIX};
use crate::document::SpecDocument;
use crate::model::{Component, ComponentId, ComponentKind, LlmConfigVariant, NodeKind, ToolKind};
use crate::property::Property;

enum Field {
    Eager(Value),
    Ref(ComponentId),
    OptRef(Option<ComponentId>),
    RefList(Vec<ComponentId>),
    RefListOrNull(Option<Vec<ComponentId>>),
}

struct Emitter<'a> {
    doc: &'a SpecDocument,
    plugins: Option<&'a PluginRegistry>,
    seen: BTreeSet<ComponentId>,
}

impl<'a> Emitter<'a> {
    fn component_value(&mut self, id: &ComponentId) -> Value {
        if self.seen.contains(id) {
            return Value::String(format!("{COMPONENT_REF_PREFIX}{id}"));
        }
        self.seen.insert(id.clone());
        let component = self
            .doc
            .component(id)
            .expect("document integrity guarantees declared components");

        let mut fields = base_fields(component);
        fields.extend(kind_fields(component, self.plugins));
        // Evaluation order must match emission order (sorted keys) so that
        // first occurrences land where the reader encounters them first.
        fields.sort_by(|a, b| a.0.cmp(&b.0));

        let mut object = Map::new();
        for (key, field) in fields {
            let value = match field {
                Field::Eager(v) => v,
                Field::Ref(target) => self.component_value(&target),
                Field::OptRef(None) => Value::Null,
                Field::OptRef(Some(target)) => self.component_value(&target),
                Field::RefList(targets) => Value::Array(
                    targets
                        .iter()
                        .map(|t| self.component_value(t))
                        .collect(),
                ),
                Field::RefListOrNull(None) => Value::Null,
                Field::RefListOrNull(Some(targets)) => Value::Array(
                    targets
                        .iter()
                        .map(|t| self.component_value(t))
                        .collect(),
                ),
            };
            object.insert(key, value);
        }
        Value::Object(object)
    }
}

fn properties_value(props: &[Property]) -> Value {
    Value::Array(props.iter().map(Property::to_value).collect())
}

fn opt_string(value: &Option<String>) -> Value {
    match value {
        Some(s) => Value::String(s.clone()),
        None => Value::Null,
    }
}

fn string_map_value(map: &std::collections::BTreeMap<String, String>) -> Value {
    Value::Object(
        map.iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect(),
    )
}

fn base_fields(component: &Component) -> Vec<(String, Field)> {
    let header = &component.header;
    vec![
        (
            "component_type".into(),
            Field::Eager(Value::String(component.component_type().to_string())),
        ),
        ("id".into(), Field::Eager(Value::String(header.id.to_string()))),
        (
            "name".into(),
            Field::Eager(Value::String(header.name.clone())),
        ),
        ("description".into(), Field::Eager(opt_string(&header.description))),
        (
            "metadata".into(),
            Field::Eager(match &header.metadata {
                Some(m) => Value::Object(m.clone()),
                None => Value::Null,
            }),
        ),
    ]
}

fn kind_fields(component: &Component, plugins: Option<&PluginRegistry>) -> Vec<(String, Field)> {
    match &component.kind {
        ComponentKind::Agent(agent) => vec![
            ("llm_config".into(), Field::OptRef(agent.llm_config.clone())),
            ("tools".into(), Field::RefList(agent.tools.clone())),
            (
                "instructions".into(),
                Field::Eager(Value::String(agent.instructions.clone())),
            ),
            ("inputs".into(), Field::Eager(properties_value(&agent.inputs))),
            ("outputs".into(), Field::Eager(properties_value(&agent.outputs))),
            (
                "max_turns".into(),
                Field::Eager(Value::Number(agent.max_turns.into())),
            ),
        ],
        ComponentKind::LlmConfig(config) => {
            let mut fields = vec![
                (
                    "temperature".into(),
                    Field::Eager(match config.temperature {
                        Some(t) => serde_json::json!(t),
                        None => Value::Null,
                    }),
                ),
                (
                    "max_tokens".into(),
                    Field::Eager(match config.max_tokens {
                        Some(n) => Value::Number(n.into()),
                        None => Value::Null,
                    }),
                ),
            ];
            if let LlmConfigVariant::Vllm { url, model_id } = &config.variant {
                fields.push(("url".into(), Field::Eager(Value::String(url.clone()))));
                fields.push((
                    "model_id".into(),
                    Field::Eager(Value::String(model_id.clone())),
                ));
            }
            fields
        }
        ComponentKind::Tool(tool) => {
            let mut fields = vec![
                ("inputs".into(), Field::Eager(properties_value(&tool.inputs))),
                ("outputs".into(), Field::Eager(properties_value(&tool.outputs))),
            ];
            match &tool.kind {
                ToolKind::Server | ToolKind::Client => {}
                ToolKind::Remote {
                    url,
                    http_method,
                    headers,
                } => {
                    fields.push(("url".into(), Field::Eager(Value::String(url.clone()))));
                    fields.push((
                        "http_method".into(),
                        Field::Eager(Value::String(http_method.as_str().to_string())),
                    ));
                    fields.push(("headers".into(), Field::Eager(string_map_value(headers))));
                }
                ToolKind::Mcp { server_ref } => {
                    fields.push((
                        "server_ref".into(),
                        Field::Eager(Value::String(server_ref.clone())),
                    ));
                }
            }
            fields
        }
        ComponentKind::Flow(flow) => vec![
            ("start_node".into(), Field::Ref(flow.start_node.clone())),
            ("nodes".into(), Field::RefList(flow.nodes.clone())),
            (
                "control_flow_connections".into(),
                Field::RefList(flow.control_flow_connections.clone()),
            ),
            (
                "data_flow_connections".into(),
                Field::RefListOrNull(flow.data_flow_connections.clone()),
            ),
            ("inputs".into(), Field::Eager(properties_value(&flow.inputs))),
            ("outputs".into(), Field::Eager(properties_value(&flow.outputs))),
        ],
        ComponentKind::Node(node) => {
            let mut fields = vec![
                ("inputs".into(), Field::Eager(properties_value(&node.inputs))),
                ("outputs".into(), Field::Eager(properties_value(&node.outputs))),
            ];
            match &node.kind {
                NodeKind::Start | NodeKind::End => {}
                NodeKind::Llm {
                    llm_config,
                    prompt_template,
                } => {
                    fields.push(("llm_config".into(), Field::Ref(llm_config.clone())));
                    fields.push((
                        "prompt_template".into(),
                        Field::Eager(Value::String(prompt_template.clone())),
                    ));
                }
                NodeKind::Api {
                    url_template,
                    http_method,
                    headers,
                    body_template,
                } => {
                    fields.push((
                        "url_template".into(),
                        Field::Eager(Value::String(url_template.clone())),
                    ));
                    fields.push((
                        "http_method".into(),
                        Field::Eager(Value::String(http_method.as_str().to_string())),
                    ));
                    fields.push(("headers".into(), Field::Eager(string_map_value(headers))));
                    fields.push(("body_template".into(), Field::Eager(opt_string(body_template))));
                }
                NodeKind::Agent { agent } => {
                    fields.push(("agent".into(), Field::Ref(agent.clone())));
                }
                NodeKind::Flow { flow } => {
                    fields.push(("flow".into(), Field::Ref(flow.clone())));
                }
                NodeKind::Map {
                    flow,
                    iterated_input,
                } => {
                    fields.push(("flow".into(), Field::Ref(flow.clone())));
                    fields.push((
                        "iterated_input".into(),
                        Field::Eager(Value::String(iterated_input.clone())),
                    ));
                }
                NodeKind::Branching {
                    branch_input,
                    mapping,
                } => {
                    fields.push((
                        "branch_input".into(),
                        Field::Eager(Value::String(branch_input.clone())),
                    ));
                    fields.push(("mapping".into(), Field::Eager(string_map_value(mapping))));
                }
                NodeKind::Tool { tool } => {
                    fields.push(("tool".into(), Field::Ref(tool.clone())));
                }
                NodeKind::InputMessage { message_template } => {
                    fields.push((
                        "message_template".into(),
                        Field::Eager(opt_string(message_template)),
                    ));
                }
                NodeKind::OutputMessage { message_template } => {
                    fields.push((
                        "message_template".into(),
                        Field::Eager(Value::String(message_template.clone())),
                    ));
                }
            }
            fields
        }
        ComponentKind::ControlFlowEdge(edge) => vec![
            ("from_node".into(), Field::Ref(edge.from_node.clone())),
            ("from_branch".into(), Field::Eager(opt_string(&edge.from_branch))),
            ("to_node".into(), Field::Ref(edge.to_node.clone())),
        ],
        ComponentKind::DataFlowEdge(edge) => vec![
            ("source_node".into(), Field::Ref(edge.source_node.clone())),
            (
                "source_output".into(),
                Field::Eager(Value::String(edge.source_output.clone())),
            ),
            (
                "destination_node".into(),
                Field::Ref(edge.destination_node.clone()),
            ),
            (
                "destination_input".into(),
                Field::Eager(Value::String(edge.destination_input.clone())),
            ),
        ],
        ComponentKind::Extension(ext) => {
            let payload = match plugins.and_then(|p| p.plugin_for(&ext.component_type)) {
                Some(plugin) => plugin
                    .serialize(ext)
                    .expect("plugin serialization of its own component"),
                None => ext.payload.clone(),
            };
            payload
                .into_iter()
                .map(|(k, v)| (k, Field::Eager(v)))
                .collect()
        }
    }
}

/// The canonical JSON value tree of a document: root component fields inline
/// at the top level, plus `agentspec_version`.
pub fn document_to_value(doc: &SpecDocument) -> Value {
    document_to_value_impl(doc, None)
}

fn document_to_value_impl(doc: &SpecDocument, plugins: Option<&PluginRegistry>) -> Value {
    let mut emitter = Emitter {
        doc,
        plugins,
        seen: BTreeSet::new(),
    };
    let mut root = match emitter.component_value(doc.root_id()) {
        Value::Object(o) => o,
        _ => unreachable!("root is always expanded"),
    };
    root.insert(
        "agentspec_version".into(),
        Value::String(doc.version().to_string()),
    );
    Value::Object(root)
}

/// Serializes a document to its canonical textual form. Byte-deterministic:
/// two calls on the same document yield identical text.
pub fn serialize(doc: &SpecDocument, format: Format) -> String {
    render(document_to_value_impl(doc, None), format)
}

/// Like [`serialize`], with plugin hooks for extension component types.
pub fn serialize_with_plugins(
    doc: &SpecDocument,
    format: Format,
    plugins: &PluginRegistry,
) -> String {
    render(document_to_value_impl(doc, Some(plugins)), format)
}

fn render(value: Value, format: Format) -> String {
    match format {
        Format::Json => {
            let mut text =
                serde_json::to_string_pretty(&value).expect("value trees always serialize");
            text.push('\n');
            text
        }
        Format::Yaml => serde_yaml::to_string(&value).expect("value trees always serialize"),
    }
}
