//! In-memory domain types for every component of an agent spec document.
//!
//! Components reference each other by [`ComponentId`]; the owning
//! [`crate::document::SpecDocument`] holds the single instance for each id.
//! All values here are immutable after construction and safe to share across
//! threads.

use std::collections::BTreeMap;

use serde_json::{Map, Value};

use crate::property::Property;

/// The default branch name every single-exit node transitions from.
pub const DEFAULT_BRANCH: &str = "next";
/// The fallback branch of a branching node when no mapping entry matches.
pub const BRANCH_FALLBACK: &str = "default";
/// Default turn budget for agents.
pub const DEFAULT_MAX_TURNS: u32 = 10;

/// Unique identifier of a component within a document.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComponentId(String);

impl ComponentId {
    pub fn new(id: impl Into<String>) -> ComponentId {
        ComponentId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for ComponentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ComponentId {
    fn from(s: &str) -> ComponentId {
        ComponentId(s.to_string())
    }
}

impl From<String> for ComponentId {
    fn from(s: String) -> ComponentId {
        ComponentId(s)
    }
}

/// Fields shared by every component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentHeader {
    pub id: ComponentId,
    pub name: String,
    pub description: Option<String>,
    /// Open key-value map for consumers (editors, runtimes). Absent by default.
    pub metadata: Option<Map<String, Value>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub header: ComponentHeader,
    pub kind: ComponentKind,
}

impl Component {
    pub fn new(id: impl Into<String>, name: impl Into<String>, kind: ComponentKind) -> Component {
        Component {
            header: ComponentHeader {
                id: ComponentId::new(id),
                name: name.into(),
                description: None,
                metadata: None,
            },
            kind,
        }
    }

    pub fn with_description(mut self, text: impl Into<String>) -> Component {
        self.header.description = Some(text.into());
        self
    }

    pub fn with_metadata(mut self, metadata: Map<String, Value>) -> Component {
        self.header.metadata = Some(metadata);
        self
    }

    pub fn id(&self) -> &ComponentId {
        &self.header.id
    }

    pub fn name(&self) -> &str {
        &self.header.name
    }

    /// The serialized `component_type` discriminator.
    pub fn component_type(&self) -> &str {
        match &self.kind {
            ComponentKind::Agent(_) => "Agent",
            ComponentKind::LlmConfig(c) => match c.variant {
                LlmConfigVariant::Generic => "LlmConfig",
                LlmConfigVariant::Vllm { .. } => "VllmConfig",
            },
            ComponentKind::Tool(t) => match t.kind {
                ToolKind::Server => "ServerTool",
                ToolKind::Client => "ClientTool",
                ToolKind::Remote { .. } => "RemoteTool",
                ToolKind::Mcp { .. } => "MCPTool",
            },
            ComponentKind::Flow(_) => "Flow",
            ComponentKind::Node(n) => match n.kind {
                NodeKind::Start => "StartNode",
                NodeKind::End => "EndNode",
                NodeKind::Llm { .. } => "LlmNode",
                NodeKind::Api { .. } => "ApiNode",
                NodeKind::Agent { .. } => "AgentNode",
                NodeKind::Flow { .. } => "FlowNode",
                NodeKind::Map { .. } => "MapNode",
                NodeKind::Branching { .. } => "BranchingNode",
                NodeKind::Tool { .. } => "ToolNode",
                NodeKind::InputMessage { .. } => "InputMessageNode",
                NodeKind::OutputMessage { .. } => "OutputMessageNode",
            },
            ComponentKind::ControlFlowEdge(_) => "ControlFlowEdge",
            ComponentKind::DataFlowEdge(_) => "DataFlowEdge",
            ComponentKind::Extension(e) => &e.component_type,
        }
    }

    pub fn as_agent(&self) -> Option<&Agent> {
        match &self.kind {
            ComponentKind::Agent(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_llm_config(&self) -> Option<&LlmConfig> {
        match &self.kind {
            ComponentKind::LlmConfig(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_tool(&self) -> Option<&Tool> {
        match &self.kind {
            ComponentKind::Tool(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_flow(&self) -> Option<&Flow> {
        match &self.kind {
            ComponentKind::Flow(f) => Some(f),
            _ => None,
        }
    }

    pub fn as_node(&self) -> Option<&Node> {
        match &self.kind {
            ComponentKind::Node(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_control_flow_edge(&self) -> Option<&ControlFlowEdge> {
        match &self.kind {
            ComponentKind::ControlFlowEdge(e) => Some(e),
            _ => None,
        }
    }

    pub fn as_data_flow_edge(&self) -> Option<&DataFlowEdge> {
        match &self.kind {
            ComponentKind::DataFlowEdge(e) => Some(e),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ComponentKind {
    Agent(Agent),
    LlmConfig(LlmConfig),
    Tool(Tool),
    Flow(Flow),
    Node(Node),
    ControlFlowEdge(ControlFlowEdge),
    DataFlowEdge(DataFlowEdge),
    /// A component owned by a serialization plugin. Carries the raw extra
    /// fields; it deserializes and validates but is not executable.
    Extension(ExtensionComponent),
}

/// Generation settings for a model backend. The generic variant carries only
/// generation parameters; `Vllm` adds connection details for an
/// OpenAI-compatible HTTP endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct LlmConfig {
    pub temperature: Option<f64>,
    pub max_tokens: Option<u64>,
    pub variant: LlmConfigVariant,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LlmConfigVariant {
    Generic,
    Vllm { url: String, model_id: String },
}

impl LlmConfig {
    pub fn generic() -> LlmConfig {
        LlmConfig {
            temperature: None,
            max_tokens: None,
            variant: LlmConfigVariant::Generic,
        }
    }

    pub fn vllm(url: impl Into<String>, model_id: impl Into<String>) -> LlmConfig {
        LlmConfig {
            temperature: None,
            max_tokens: None,
            variant: LlmConfigVariant::Vllm {
                url: url.into(),
                model_id: model_id.into(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum HttpMethod {
    Get,
    Post,
    Put,
    Delete,
}

impl HttpMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            HttpMethod::Get => "GET",
            HttpMethod::Post => "POST",
            HttpMethod::Put => "PUT",
            HttpMethod::Delete => "DELETE",
        }
    }

    pub fn parse(s: &str) -> Option<HttpMethod> {
        match s {
            "GET" => Some(HttpMethod::Get),
            "POST" => Some(HttpMethod::Post),
            "PUT" => Some(HttpMethod::Put),
            "DELETE" => Some(HttpMethod::Delete),
            _ => None,
        }
    }
}

/// A structural tool description: inputs, outputs, and where it executes.
/// Tools never carry executable code; hosts bind behavior at runtime.
#[derive(Debug, Clone, PartialEq)]
pub struct Tool {
    pub inputs: Vec<Property>,
    pub outputs: Vec<Property>,
    pub kind: ToolKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ToolKind {
    /// Executed inside the runtime from a host-provided registry.
    Server,
    /// Executed by the client; the run suspends until results arrive.
    Client,
    /// Executed over HTTP against an external endpoint.
    Remote {
        url: String,
        http_method: HttpMethod,
        headers: BTreeMap<String, String>,
    },
    /// Provided by an MCP server. Parsed and validated; execution is a
    /// declared extension point.
    Mcp { server_ref: String },
}

/// A conversational agent: one LLM, a set of tools, templated instructions,
/// and the output contract it must populate to finish.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    /// Absent only in malformed documents; validation reports it.
    pub llm_config: Option<ComponentId>,
    pub tools: Vec<ComponentId>,
    pub instructions: String,
    pub inputs: Vec<Property>,
    pub outputs: Vec<Property>,
    pub max_turns: u32,
}

/// A directed, potentially cyclic graph of nodes with separate control-flow
/// and data-flow edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub start_node: ComponentId,
    pub nodes: Vec<ComponentId>,
    pub control_flow_connections: Vec<ComponentId>,
    /// `None` selects name-based binding through a shared variable space.
    pub data_flow_connections: Option<Vec<ComponentId>>,
    pub inputs: Vec<Property>,
    pub outputs: Vec<Property>,
}

impl Flow {
    pub fn is_name_based(&self) -> bool {
        self.data_flow_connections.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub inputs: Vec<Property>,
    pub outputs: Vec<Property>,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Start,
    End,
    Llm {
        llm_config: ComponentId,
        prompt_template: String,
    },
    Api {
        url_template: String,
        http_method: HttpMethod,
        headers: BTreeMap<String, String>,
        body_template: Option<String>,
    },
    Agent {
        agent: ComponentId,
    },
    Flow {
        flow: ComponentId,
    },
    Map {
        flow: ComponentId,
        iterated_input: String,
    },
    Branching {
        branch_input: String,
        /// Input value (stringified) to branch name.
        mapping: BTreeMap<String, String>,
    },
    Tool {
        tool: ComponentId,
    },
    InputMessage {
        message_template: Option<String>,
    },
    OutputMessage {
        message_template: String,
    },
}

impl Node {
    /// Output properties other nodes may consume. A start node republishes
    /// its inputs, so they double as its outputs.
    pub fn source_properties(&self) -> &[Property] {
        match self.kind {
            NodeKind::Start => &self.inputs,
            _ => &self.outputs,
        }
    }

    /// Input slots data edges may feed. An end node collects values named by
    /// its outputs, so they double as its inputs.
    pub fn sink_properties(&self) -> &[Property] {
        match self.kind {
            NodeKind::End => &self.outputs,
            _ => &self.inputs,
        }
    }
}

/// Branch names a node can exit through. End nodes have none; branching
/// nodes expose their mapped branches plus the fallback; everything else has
/// the single default branch.
pub fn branches_of(node: &Node) -> Vec<String> {
    match &node.kind {
        NodeKind::End => Vec::new(),
        NodeKind::Branching { mapping, .. } => {
            let mut branches: Vec<String> = mapping.values().cloned().collect();
            branches.sort();
            branches.dedup();
            branches.push(BRANCH_FALLBACK.to_string());
            branches
        }
        _ => vec![DEFAULT_BRANCH.to_string()],
    }
}

/// A permitted execution transition from one branch of a node to another node.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlFlowEdge {
    pub from_node: ComponentId,
    /// Absent means the node's default branch (`next`).
    pub from_branch: Option<String>,
    pub to_node: ComponentId,
}

impl ControlFlowEdge {
    pub fn effective_branch(&self) -> &str {
        self.from_branch.as_deref().unwrap_or(DEFAULT_BRANCH)
    }
}

/// A mapping from one node's output property to another node's input property.
#[derive(Debug, Clone, PartialEq)]
pub struct DataFlowEdge {
    pub source_node: ComponentId,
    pub source_output: String,
    pub destination_node: ComponentId,
    pub destination_input: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionComponent {
    pub component_type: String,
    /// Extra serialized fields beyond the base component fields.
    pub payload: Map<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    System,
    Agent,
    User,
    Tool,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::Agent => "agent",
            Role::User => "user",
            Role::Tool => "tool",
        }
    }
}

/// One entry of the conversation shared by all components during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub role: Role,
    pub content: String,
    pub sender: String,
    pub recipient: String,
}

impl Message {
    pub fn new(
        role: Role,
        content: impl Into<String>,
        sender: impl Into<String>,
        recipient: impl Into<String>,
    ) -> Message {
        Message {
            role,
            content: content.into(),
            sender: sender.into(),
            recipient: recipient.into(),
        }
    }
}

/// Renders a runtime value the way templates and branch lookups see it:
/// strings verbatim, everything else as compact JSON.
pub fn value_to_text(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(kind: NodeKind) -> Node {
        Node {
            inputs: vec![],
            outputs: vec![],
            kind,
        }
    }

    #[test]
    fn default_branch_for_plain_nodes() {
        let n = node(NodeKind::Llm {
            llm_config: "cfg".into(),
            prompt_template: "{{p}}".into(),
        });
        assert_eq!(branches_of(&n), vec!["next"]);
    }

    #[test]
    fn end_node_has_no_branches() {
        assert!(branches_of(&node(NodeKind::End)).is_empty());
    }

    // Oracle: enumerate the mapping values plus the fallback and compare.
    #[test]
    fn branching_node_branches_are_mapping_values_plus_fallback() {
        let mut mapping = BTreeMap::new();
        mapping.insert("yes".to_string(), "accept".to_string());
        mapping.insert("no".to_string(), "reject".to_string());
        let n = node(NodeKind::Branching {
            branch_input: "verdict".into(),
            mapping: mapping.clone(),
        });

        let mut expected: Vec<String> = mapping.values().cloned().collect();
        expected.sort();
        expected.dedup();
        expected.push("default".to_string());

        assert_eq!(branches_of(&n), expected);
        assert_eq!(branches_of(&n), vec!["accept", "reject", "default"]);
    }

    #[test]
    fn duplicate_mapping_targets_collapse() {
        let mut mapping = BTreeMap::new();
        mapping.insert("a".to_string(), "go".to_string());
        mapping.insert("b".to_string(), "go".to_string());
        let n = node(NodeKind::Branching {
            branch_input: "v".into(),
            mapping,
        });
        assert_eq!(branches_of(&n), vec!["go", "default"]);
    }

    #[test]
    fn start_and_end_property_mirroring() {
        let mut start = node(NodeKind::Start);
        start.inputs = vec![Property::string("prompt")];
        assert_eq!(start.source_properties()[0].name(), "prompt");
        let mut end = node(NodeKind::End);
        end.outputs = vec![Property::string("answer")];
        assert_eq!(end.sink_properties()[0].name(), "answer");
    }

    #[test]
    fn value_text_forms() {
        assert_eq!(value_to_text(&serde_json::json!("hi")), "hi");
        assert_eq!(value_to_text(&serde_json::json!(42)), "42");
        assert_eq!(value_to_text(&serde_json::json!({"a": 1})), r#"{"a":1}"#);
    }
}
