//! The built-in conformance corpus, seeded-defect corpus, and toy dataset.
//!
//! Every document here is constructed programmatically and serialized to its
//! canonical form; `write_corpus` freezes specs, scenarios, expected
//! outcomes, and traces into a case directory tree. Defects are targeted
//! mutations of the serialized JSON, each planting exactly one diagnostic.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Map, Value};

use super::conformance::{run_scenario, CaseOutcome, ResumeSpec, Scenario, StubBehavior};
use super::HarnessError;
use crate::diagnostics::{DiagnosticCode, DOCUMENT_TARGET};
use crate::document::{DocumentBuilder, SpecDocument};
use crate::io::{serialize, Format};
use crate::model::{
    Agent, Component, ComponentKind, ControlFlowEdge, DataFlowEdge, Flow, HttpMethod,
    LlmConfig, Node, NodeKind, Tool, ToolKind,
};
use crate::property::{Property, PropertyType};

// ----------------------------------------------------------------------
// small construction helpers
// ----------------------------------------------------------------------

fn node(
    id: &str,
    name: &str,
    inputs: Vec<Property>,
    outputs: Vec<Property>,
    kind: NodeKind,
) -> Component {
    Component::new(
        id,
        name,
        ComponentKind::Node(Node {
            inputs,
            outputs,
            kind,
        }),
    )
}

fn cf_edge(id: &str, from: &str, branch: Option<&str>, to: &str) -> Component {
    Component::new(
        id,
        id,
        ComponentKind::ControlFlowEdge(ControlFlowEdge {
            from_node: from.into(),
            from_branch: branch.map(str::to_string),
            to_node: to.into(),
        }),
    )
}

fn df_edge(id: &str, source: &str, output: &str, destination: &str, input: &str) -> Component {
    Component::new(
        id,
        id,
        ComponentKind::DataFlowEdge(DataFlowEdge {
            source_node: source.into(),
            source_output: output.into(),
            destination_node: destination.into(),
            destination_input: input.into(),
        }),
    )
}

struct FlowParts<'a> {
    id: &'a str,
    name: &'a str,
    start: &'a str,
    nodes: Vec<&'a str>,
    control: Vec<&'a str>,
    data: Option<Vec<&'a str>>,
    inputs: Vec<Property>,
    outputs: Vec<Property>,
}

fn flow_component(parts: FlowParts<'_>) -> Component {
    Component::new(
        parts.id,
        parts.name,
        ComponentKind::Flow(Flow {
            start_node: parts.start.into(),
            nodes: parts.nodes.into_iter().map(Into::into).collect(),
            control_flow_connections: parts.control.into_iter().map(Into::into).collect(),
            data_flow_connections: parts
                .data
                .map(|edges| edges.into_iter().map(Into::into).collect()),
            inputs: parts.inputs,
            outputs: parts.outputs,
        }),
    )
}

fn server_tool(
    id: &str,
    name: &str,
    description: &str,
    inputs: Vec<Property>,
    outputs: Vec<Property>,
) -> Component {
    Component::new(
        id,
        name,
        ComponentKind::Tool(Tool {
            inputs,
            outputs,
            kind: ToolKind::Server,
        }),
    )
    .with_description(description)
}

fn insert_all(builder: &mut DocumentBuilder, components: Vec<Component>) {
    for component in components {
        builder
            .insert(component)
            .expect("corpus component ids are unique");
    }
}

fn finish(builder: DocumentBuilder, root: &str) -> SpecDocument {
    builder
        .finish(root.into())
        .expect("corpus documents are structurally sound")
}

fn object(pairs: &[(&str, Value)]) -> Map<String, Value> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

// ----------------------------------------------------------------------
// case documents
// ----------------------------------------------------------------------

/// The golden single-LLM prompting flow: start -> llm -> end, with the
/// prompt wired in and the model text wired out.
pub fn simple_prompt_document() -> SpecDocument {
    let mut b = DocumentBuilder::new();
    insert_all(
        &mut b,
        vec![
            Component::new(
                "vllm_config",
                "example-llm",
                ComponentKind::LlmConfig(LlmConfig::vllm(
                    "http://localhost:8000",
                    "example/model-1",
                )),
            ),
            node(
                "start",
                "start",
                vec![Property::string("prompt")],
                vec![],
                NodeKind::Start,
            ),
            node(
                "llm_node",
                "simple llm node",
                vec![Property::string("prompt")],
                vec![Property::string("llm_output")],
                NodeKind::Llm {
                    llm_config: "vllm_config".into(),
                    prompt_template: "{{prompt}}".into(),
                },
            ),
            node(
                "end",
                "end",
                vec![],
                vec![Property::string("llm_output")],
                NodeKind::End,
            ),
            cf_edge("start_to_llm", "start", None, "llm_node"),
            cf_edge("llm_to_end", "llm_node", None, "end"),
            df_edge("prompt_edge", "start", "prompt", "llm_node", "prompt"),
            df_edge("llm_output_edge", "llm_node", "llm_output", "end", "llm_output"),
            flow_component(FlowParts {
                id: "flow",
                name: "Simple prompting flow",
                start: "start",
                nodes: vec!["start", "llm_node", "end"],
                control: vec!["start_to_llm", "llm_to_end"],
                data: Some(vec!["prompt_edge", "llm_output_edge"]),
                inputs: vec![Property::string("prompt")],
                outputs: vec![Property::string("llm_output")],
            }),
        ],
    );
    finish(b, "flow")
}

/// Two branches that converge on one node; the converged input carries the
/// value from whichever branch executed.
pub fn converge_document() -> SpecDocument {
    let mut b = DocumentBuilder::new();
    let mut mapping = BTreeMap::new();
    mapping.insert("left".to_string(), "go_left".to_string());
    mapping.insert("right".to_string(), "go_right".to_string());
    insert_all(
        &mut b,
        vec![
            server_tool(
                "mark_left_tool",
                "mark_left",
                "labels the left branch",
                vec![Property::string("seed")],
                vec![Property::string("v")],
            ),
            server_tool(
                "mark_right_tool",
                "mark_right",
                "labels the right branch",
                vec![Property::string("seed")],
                vec![Property::string("v")],
            ),
            node(
                "start",
                "start",
                vec![Property::string("choice"), Property::string("seed")],
                vec![],
                NodeKind::Start,
            ),
            node(
                "gate",
                "gate",
                vec![Property::string("choice")],
                vec![],
                NodeKind::Branching {
                    branch_input: "choice".into(),
                    mapping,
                },
            ),
            node(
                "left",
                "left",
                vec![Property::string("seed")],
                vec![Property::string("v")],
                NodeKind::Tool {
                    tool: "mark_left_tool".into(),
                },
            ),
            node(
                "right",
                "right",
                vec![Property::string("seed")],
                vec![Property::string("v")],
                NodeKind::Tool {
                    tool: "mark_right_tool".into(),
                },
            ),
            node(
                "say",
                "say",
                vec![Property::string("v")],
                vec![],
                NodeKind::OutputMessage {
                    message_template: "picked: {{v}}".into(),
                },
            ),
            node(
                "end",
                "end",
                vec![],
                vec![Property::string("v")],
                NodeKind::End,
            ),
            cf_edge("start_to_gate", "start", None, "gate"),
            cf_edge("gate_left", "gate", Some("go_left"), "left"),
            cf_edge("gate_right", "gate", Some("go_right"), "right"),
            cf_edge("gate_default", "gate", Some("default"), "right"),
            cf_edge("left_to_say", "left", None, "say"),
            cf_edge("right_to_say", "right", None, "say"),
            cf_edge("say_to_end", "say", None, "end"),
            df_edge("choice_edge", "start", "choice", "gate", "choice"),
            df_edge("seed_left_edge", "start", "seed", "left", "seed"),
            df_edge("seed_right_edge", "start", "seed", "right", "seed"),
            df_edge("left_say_edge", "left", "v", "say", "v"),
            df_edge("right_say_edge", "right", "v", "say", "v"),
            df_edge("left_end_edge", "left", "v", "end", "v"),
            df_edge("right_end_edge", "right", "v", "end", "v"),
            flow_component(FlowParts {
                id: "flow",
                name: "Converging branches",
                start: "start",
                nodes: vec!["start", "gate", "left", "right", "say", "end"],
                control: vec![
                    "start_to_gate",
                    "gate_left",
                    "gate_right",
                    "gate_default",
                    "left_to_say",
                    "right_to_say",
                    "say_to_end",
                ],
                data: Some(vec![
                    "choice_edge",
                    "seed_left_edge",
                    "seed_right_edge",
                    "left_say_edge",
                    "right_say_edge",
                    "left_end_edge",
                    "right_end_edge",
                ]),
                inputs: vec![Property::string("choice"), Property::string("seed")],
                outputs: vec![Property::string("v")],
            }),
        ],
    );
    finish(b, "flow")
}

/// A counter loop: the increment node's input is fed by the start node and
/// by its own output, so each iteration reads the previous iteration's
/// write under the recency rule.
pub fn self_loop_document() -> SpecDocument {
    let mut b = DocumentBuilder::new();
    let mut mapping = BTreeMap::new();
    mapping.insert("4".to_string(), "done".to_string());
    insert_all(
        &mut b,
        vec![
            server_tool(
                "increment_tool",
                "increment",
                "adds one",
                vec![Property::integer("x")],
                vec![Property::integer("x")],
            ),
            node(
                "start",
                "start",
                vec![Property::integer("x")],
                vec![],
                NodeKind::Start,
            ),
            node(
                "inc",
                "inc",
                vec![Property::integer("x")],
                vec![Property::integer("x")],
                NodeKind::Tool {
                    tool: "increment_tool".into(),
                },
            ),
            node(
                "gate",
                "gate",
                vec![Property::integer("v")],
                vec![],
                NodeKind::Branching {
                    branch_input: "v".into(),
                    mapping,
                },
            ),
            node(
                "end",
                "end",
                vec![],
                vec![Property::integer("x")],
                NodeKind::End,
            ),
            cf_edge("start_to_inc", "start", None, "inc"),
            cf_edge("inc_to_gate", "inc", None, "gate"),
            cf_edge("gate_done", "gate", Some("done"), "end"),
            cf_edge("gate_loop", "gate", Some("default"), "inc"),
            df_edge("seed_edge", "start", "x", "inc", "x"),
            df_edge("self_edge", "inc", "x", "inc", "x"),
            df_edge("gate_edge", "inc", "x", "gate", "v"),
            df_edge("exit_edge", "inc", "x", "end", "x"),
            flow_component(FlowParts {
                id: "flow",
                name: "Self-updating loop",
                start: "start",
                nodes: vec!["start", "inc", "gate", "end"],
                control: vec!["start_to_inc", "inc_to_gate", "gate_done", "gate_loop"],
                data: Some(vec!["seed_edge", "self_edge", "gate_edge", "exit_edge"]),
                inputs: vec![Property::integer("x")],
                outputs: vec![Property::integer("x")],
            }),
        ],
    );
    finish(b, "flow")
}

/// The inner flow used by map and flow-node cases: doubles one integer.
fn insert_double_flow(b: &mut DocumentBuilder) {
    insert_all(
        b,
        vec![
            server_tool(
                "double_tool",
                "double",
                "doubles an integer",
                vec![Property::integer("x")],
                vec![Property::integer("y")],
            ),
            node(
                "inner_start",
                "inner start",
                vec![Property::integer("x")],
                vec![],
                NodeKind::Start,
            ),
            node(
                "dbl",
                "dbl",
                vec![Property::integer("x")],
                vec![Property::integer("y")],
                NodeKind::Tool {
                    tool: "double_tool".into(),
                },
            ),
            node(
                "inner_end",
                "inner end",
                vec![],
                vec![Property::integer("y")],
                NodeKind::End,
            ),
            cf_edge("inner_start_to_dbl", "inner_start", None, "dbl"),
            cf_edge("dbl_to_inner_end", "dbl", None, "inner_end"),
            df_edge("inner_x_edge", "inner_start", "x", "dbl", "x"),
            df_edge("inner_y_edge", "dbl", "y", "inner_end", "y"),
            flow_component(FlowParts {
                id: "double_flow",
                name: "Doubling flow",
                start: "inner_start",
                nodes: vec!["inner_start", "dbl", "inner_end"],
                control: vec!["inner_start_to_dbl", "dbl_to_inner_end"],
                data: Some(vec!["inner_x_edge", "inner_y_edge"]),
                inputs: vec![Property::integer("x")],
                outputs: vec![Property::integer("y")],
            }),
        ],
    );
}

pub fn map_document() -> SpecDocument {
    let mut b = DocumentBuilder::new();
    insert_double_flow(&mut b);
    insert_all(
        &mut b,
        vec![
            node(
                "start",
                "start",
                vec![Property::array_of("x", PropertyType::Integer)],
                vec![],
                NodeKind::Start,
            ),
            node(
                "mapper",
                "mapper",
                vec![Property::array_of("x", PropertyType::Integer)],
                vec![Property::array_of("y", PropertyType::Integer)],
                NodeKind::Map {
                    flow: "double_flow".into(),
                    iterated_input: "x".into(),
                },
            ),
            node(
                "end",
                "end",
                vec![],
                vec![Property::array_of("y", PropertyType::Integer)],
                NodeKind::End,
            ),
            cf_edge("start_to_mapper", "start", None, "mapper"),
            cf_edge("mapper_to_end", "mapper", None, "end"),
            df_edge("xs_edge", "start", "x", "mapper", "x"),
            df_edge("ys_edge", "mapper", "y", "end", "y"),
            flow_component(FlowParts {
                id: "flow",
                name: "Map over integers",
                start: "start",
                nodes: vec!["start", "mapper", "end"],
                control: vec!["start_to_mapper", "mapper_to_end"],
                data: Some(vec!["xs_edge", "ys_edge"]),
                inputs: vec![Property::array_of("x", PropertyType::Integer)],
                outputs: vec![Property::array_of("y", PropertyType::Integer)],
            }),
        ],
    );
    finish(b, "flow")
}

pub fn flow_nested_document() -> SpecDocument {
    let mut b = DocumentBuilder::new();
    insert_double_flow(&mut b);
    insert_all(
        &mut b,
        vec![
            node(
                "start",
                "start",
                vec![Property::integer("x")],
                vec![],
                NodeKind::Start,
            ),
            node(
                "wrap",
                "wrap",
                vec![Property::integer("x")],
                vec![Property::integer("y")],
                NodeKind::Flow {
                    flow: "double_flow".into(),
                },
            ),
            node(
                "end",
                "end",
                vec![],
                vec![Property::integer("y")],
                NodeKind::End,
            ),
            cf_edge("start_to_wrap", "start", None, "wrap"),
            cf_edge("wrap_to_end", "wrap", None, "end"),
            df_edge("x_edge", "start", "x", "wrap", "x"),
            df_edge("y_edge", "wrap", "y", "end", "y"),
            flow_component(FlowParts {
                id: "flow",
                name: "Nested doubling",
                start: "start",
                nodes: vec!["start", "wrap", "end"],
                control: vec!["start_to_wrap", "wrap_to_end"],
                data: Some(vec!["x_edge", "y_edge"]),
                inputs: vec![Property::integer("x")],
                outputs: vec![Property::integer("y")],
            }),
        ],
    );
    finish(b, "flow")
}

pub fn branching_default_document() -> SpecDocument {
    let mut b = DocumentBuilder::new();
    let mut mapping = BTreeMap::new();
    mapping.insert("yes".to_string(), "accept".to_string());
    insert_all(
        &mut b,
        vec![
            node(
                "start",
                "start",
                vec![Property::string("v")],
                vec![],
                NodeKind::Start,
            ),
            node(
                "gate",
                "gate",
                vec![Property::string("v")],
                vec![],
                NodeKind::Branching {
                    branch_input: "v".into(),
                    mapping,
                },
            ),
            node(
                "say_yes",
                "say yes",
                vec![],
                vec![Property::string("msg")],
                NodeKind::OutputMessage {
                    message_template: "accepted".into(),
                },
            ),
            node(
                "say_other",
                "say other",
                vec![],
                vec![Property::string("msg")],
                NodeKind::OutputMessage {
                    message_template: "fell through".into(),
                },
            ),
            node(
                "end",
                "end",
                vec![],
                vec![Property::string("msg")],
                NodeKind::End,
            ),
            cf_edge("start_to_gate", "start", None, "gate"),
            cf_edge("gate_accept", "gate", Some("accept"), "say_yes"),
            cf_edge("gate_default", "gate", Some("default"), "say_other"),
            cf_edge("yes_to_end", "say_yes", None, "end"),
            cf_edge("other_to_end", "say_other", None, "end"),
            df_edge("v_edge", "start", "v", "gate", "v"),
            df_edge("yes_msg_edge", "say_yes", "msg", "end", "msg"),
            df_edge("other_msg_edge", "say_other", "msg", "end", "msg"),
            flow_component(FlowParts {
                id: "flow",
                name: "Default branch",
                start: "start",
                nodes: vec!["start", "gate", "say_yes", "say_other", "end"],
                control: vec![
                    "start_to_gate",
                    "gate_accept",
                    "gate_default",
                    "yes_to_end",
                    "other_to_end",
                ],
                data: Some(vec!["v_edge", "yes_msg_edge", "other_msg_edge"]),
                inputs: vec![Property::string("v")],
                outputs: vec![Property::string("msg")],
            }),
        ],
    );
    finish(b, "flow")
}

pub fn ask_user_document() -> SpecDocument {
    let mut b = DocumentBuilder::new();
    insert_all(
        &mut b,
        vec![
            node(
                "start",
                "start",
                vec![Property::string("country")],
                vec![],
                NodeKind::Start,
            ),
            node(
                "ask",
                "ask",
                vec![Property::string("country")],
                vec![Property::string("reply")],
                NodeKind::InputMessage {
                    message_template: Some("What is the capital of {{country}}?".into()),
                },
            ),
            node(
                "say",
                "say",
                vec![Property::string("reply")],
                vec![],
                NodeKind::OutputMessage {
                    message_template: "You said: {{reply}}".into(),
                },
            ),
            node(
                "end",
                "end",
                vec![],
                vec![Property::string("reply")],
                NodeKind::End,
            ),
            cf_edge("start_to_ask", "start", None, "ask"),
            cf_edge("ask_to_say", "ask", None, "say"),
            cf_edge("say_to_end", "say", None, "end"),
            df_edge("country_edge", "start", "country", "ask", "country"),
            df_edge("reply_say_edge", "ask", "reply", "say", "reply"),
            df_edge("reply_end_edge", "ask", "reply", "end", "reply"),
            flow_component(FlowParts {
                id: "flow",
                name: "Ask the user",
                start: "start",
                nodes: vec!["start", "ask", "say", "end"],
                control: vec!["start_to_ask", "ask_to_say", "say_to_end"],
                data: Some(vec!["country_edge", "reply_say_edge", "reply_end_edge"]),
                inputs: vec![Property::string("country")],
                outputs: vec![Property::string("reply")],
            }),
        ],
    );
    finish(b, "flow")
}

fn lookup_tool() -> Component {
    server_tool(
        "lookup_tool",
        "lookup",
        "looks up a fact",
        vec![Property::string("q")],
        vec![Property::string("answer")],
    )
}

/// Agent with one server tool, driven by a scripted tool call plus final
/// outputs.
pub fn agent_server_tool_document() -> SpecDocument {
    let mut b = DocumentBuilder::new();
    insert_all(
        &mut b,
        vec![
            Component::new(
                "llm_config",
                "mock-llm",
                ComponentKind::LlmConfig(LlmConfig::generic()),
            ),
            lookup_tool(),
            Component::new(
                "researcher",
                "researcher",
                ComponentKind::Agent(Agent {
                    llm_config: Some("llm_config".into()),
                    tools: vec!["lookup_tool".into()],
                    instructions: "Answer questions about {{topic}}.".into(),
                    inputs: vec![Property::string("topic")],
                    outputs: vec![Property::string("answer")],
                    max_turns: 10,
                }),
            ),
        ],
    );
    finish(b, "researcher")
}

pub fn agent_client_tool_document() -> SpecDocument {
    let mut b = DocumentBuilder::new();
    insert_all(
        &mut b,
        vec![
            Component::new(
                "llm_config",
                "mock-llm",
                ComponentKind::LlmConfig(LlmConfig::generic()),
            ),
            Component::new(
                "fetch_tool",
                "fetch_page",
                ComponentKind::Tool(Tool {
                    inputs: vec![Property::string("url")],
                    outputs: vec![Property::string("content")],
                    kind: ToolKind::Client,
                }),
            )
            .with_description("fetches a page in the client"),
            Component::new(
                "browser",
                "browser",
                ComponentKind::Agent(Agent {
                    llm_config: Some("llm_config".into()),
                    tools: vec!["fetch_tool".into()],
                    instructions: "Summarize {{topic}}.".into(),
                    inputs: vec![Property::string("topic")],
                    outputs: vec![Property::string("answer")],
                    max_turns: 10,
                }),
            ),
        ],
    );
    finish(b, "browser")
}

pub fn agent_chat_document() -> SpecDocument {
    let mut b = DocumentBuilder::new();
    insert_all(
        &mut b,
        vec![
            Component::new(
                "llm_config",
                "mock-llm",
                ComponentKind::LlmConfig(LlmConfig::generic()),
            ),
            Component::new(
                "guide",
                "guide",
                ComponentKind::Agent(Agent {
                    llm_config: Some("llm_config".into()),
                    tools: vec![],
                    instructions: "Help the user with {{topic}}.".into(),
                    inputs: vec![Property::string("topic")],
                    outputs: vec![Property::string("answer")],
                    max_turns: 10,
                }),
            ),
        ],
    );
    finish(b, "guide")
}

pub fn agent_max_turns_document() -> SpecDocument {
    let mut b = DocumentBuilder::new();
    insert_all(
        &mut b,
        vec![
            Component::new(
                "llm_config",
                "mock-llm",
                ComponentKind::LlmConfig(LlmConfig::generic()),
            ),
            server_tool(
                "noop_tool",
                "noop",
                "does nothing",
                vec![],
                vec![Property::boolean("ok")],
            ),
            Component::new(
                "spinner",
                "spinner",
                ComponentKind::Agent(Agent {
                    llm_config: Some("llm_config".into()),
                    tools: vec!["noop_tool".into()],
                    instructions: "Loop forever.".into(),
                    inputs: vec![],
                    outputs: vec![Property::string("answer")],
                    max_turns: 2,
                }),
            ),
        ],
    );
    finish(b, "spinner")
}

pub fn agent_in_flow_document() -> SpecDocument {
    let mut b = DocumentBuilder::new();
    insert_all(
        &mut b,
        vec![
            Component::new(
                "llm_config",
                "mock-llm",
                ComponentKind::LlmConfig(LlmConfig::generic()),
            ),
            lookup_tool(),
            Component::new(
                "helper",
                "helper",
                ComponentKind::Agent(Agent {
                    llm_config: Some("llm_config".into()),
                    tools: vec!["lookup_tool".into()],
                    instructions: "Answer questions about {{topic}}.".into(),
                    inputs: vec![Property::string("topic")],
                    outputs: vec![Property::string("answer")],
                    max_turns: 10,
                }),
            ),
            node(
                "start",
                "start",
                vec![Property::string("topic")],
                vec![],
                NodeKind::Start,
            ),
            node(
                "consult",
                "consult",
                vec![Property::string("topic")],
                vec![Property::string("answer")],
                NodeKind::Agent {
                    agent: "helper".into(),
                },
            ),
            node(
                "say",
                "say",
                vec![Property::string("answer")],
                vec![],
                NodeKind::OutputMessage {
                    message_template: "answer: {{answer}}".into(),
                },
            ),
            node(
                "end",
                "end",
                vec![],
                vec![Property::string("answer")],
                NodeKind::End,
            ),
            cf_edge("start_to_consult", "start", None, "consult"),
            cf_edge("consult_to_say", "consult", None, "say"),
            cf_edge("say_to_end", "say", None, "end"),
            df_edge("topic_edge", "start", "topic", "consult", "topic"),
            df_edge("answer_say_edge", "consult", "answer", "say", "answer"),
            df_edge("answer_end_edge", "consult", "answer", "end", "answer"),
            flow_component(FlowParts {
                id: "flow",
                name: "Consult an agent",
                start: "start",
                nodes: vec!["start", "consult", "say", "end"],
                control: vec!["start_to_consult", "consult_to_say", "say_to_end"],
                data: Some(vec!["topic_edge", "answer_say_edge", "answer_end_edge"]),
                inputs: vec![Property::string("topic")],
                outputs: vec![Property::string("answer")],
            }),
        ],
    );
    finish(b, "flow")
}

pub fn client_tool_in_flow_document() -> SpecDocument {
    let mut b = DocumentBuilder::new();
    insert_all(
        &mut b,
        vec![
            Component::new(
                "calc_tool",
                "calculator",
                ComponentKind::Tool(Tool {
                    inputs: vec![Property::string("q")],
                    outputs: vec![Property::string("result")],
                    kind: ToolKind::Client,
                }),
            )
            .with_description("evaluates an expression on the client"),
            node(
                "start",
                "start",
                vec![Property::string("q")],
                vec![],
                NodeKind::Start,
            ),
            node(
                "calc",
                "calc",
                vec![Property::string("q")],
                vec![Property::string("result")],
                NodeKind::Tool {
                    tool: "calc_tool".into(),
                },
            ),
            node(
                "end",
                "end",
                vec![],
                vec![Property::string("result")],
                NodeKind::End,
            ),
            cf_edge("start_to_calc", "start", None, "calc"),
            cf_edge("calc_to_end", "calc", None, "end"),
            df_edge("q_edge", "start", "q", "calc", "q"),
            df_edge("result_edge", "calc", "result", "end", "result"),
            flow_component(FlowParts {
                id: "flow",
                name: "Client calculator",
                start: "start",
                nodes: vec!["start", "calc", "end"],
                control: vec!["start_to_calc", "calc_to_end"],
                data: Some(vec!["q_edge", "result_edge"]),
                inputs: vec![Property::string("q")],
                outputs: vec![Property::string("result")],
            }),
        ],
    );
    finish(b, "flow")
}

/// Static document covering the HTTP-facing surface: an API node, a remote
/// tool, and an MCP tool. Validated and round-tripped, never executed in
/// the corpus.
pub fn http_static_document() -> SpecDocument {
    let mut b = DocumentBuilder::new();
    let mut remote_headers = BTreeMap::new();
    remote_headers.insert("x-api-key".to_string(), "demo".to_string());
    insert_all(
        &mut b,
        vec![
            Component::new(
                "fetch_info_tool",
                "fetch_info",
                ComponentKind::Tool(Tool {
                    inputs: vec![Property::string("body")],
                    outputs: vec![Property::string("summary")],
                    kind: ToolKind::Remote {
                        url: "http://127.0.0.1:9/info".into(),
                        http_method: HttpMethod::Post,
                        headers: remote_headers,
                    },
                }),
            )
            .with_description("summarizes a geo payload"),
            Component::new(
                "catalog_tool",
                "catalog_search",
                ComponentKind::Tool(Tool {
                    inputs: vec![Property::string("summary")],
                    outputs: vec![Property::string("listing")],
                    kind: ToolKind::Mcp {
                        server_ref: "mcp://catalog.internal".into(),
                    },
                }),
            )
            .with_description("searches the catalog over MCP"),
            node(
                "start",
                "start",
                vec![Property::string("city")],
                vec![],
                NodeKind::Start,
            ),
            node(
                "geo",
                "geo",
                vec![Property::string("city")],
                vec![Property::integer("status"), Property::string("body")],
                NodeKind::Api {
                    url_template: "http://127.0.0.1:9/geo/{{city}}".into(),
                    http_method: HttpMethod::Get,
                    headers: BTreeMap::new(),
                    body_template: None,
                },
            ),
            node(
                "fetch",
                "fetch",
                vec![Property::string("body")],
                vec![Property::string("summary")],
                NodeKind::Tool {
                    tool: "fetch_info_tool".into(),
                },
            ),
            node(
                "catalog",
                "catalog",
                vec![Property::string("summary")],
                vec![Property::string("listing")],
                NodeKind::Tool {
                    tool: "catalog_tool".into(),
                },
            ),
            node(
                "end",
                "end",
                vec![],
                vec![Property::string("listing")],
                NodeKind::End,
            ),
            cf_edge("start_to_geo", "start", None, "geo"),
            cf_edge("geo_to_fetch", "geo", None, "fetch"),
            cf_edge("fetch_to_catalog", "fetch", None, "catalog"),
            cf_edge("catalog_to_end", "catalog", None, "end"),
            df_edge("city_edge", "start", "city", "geo", "city"),
            df_edge("body_edge", "geo", "body", "fetch", "body"),
            df_edge("summary_edge", "fetch", "summary", "catalog", "summary"),
            df_edge("listing_edge", "catalog", "listing", "end", "listing"),
            flow_component(FlowParts {
                id: "flow",
                name: "HTTP surfaces",
                start: "start",
                nodes: vec!["start", "geo", "fetch", "catalog", "end"],
                control: vec![
                    "start_to_geo",
                    "geo_to_fetch",
                    "fetch_to_catalog",
                    "catalog_to_end",
                ],
                data: Some(vec!["city_edge", "body_edge", "summary_edge", "listing_edge"]),
                inputs: vec![Property::string("city")],
                outputs: vec![Property::string("listing")],
            }),
        ],
    );
    finish(b, "flow")
}

/// Name-based flow: no data edges, values travel through the shared
/// variable space.
pub fn name_based_document() -> SpecDocument {
    let mut b = DocumentBuilder::new();
    insert_all(
        &mut b,
        vec![
            server_tool(
                "upper_tool",
                "upper",
                "uppercases its arguments",
                vec![Property::string("greeting")],
                vec![Property::string("greeting")],
            ),
            node(
                "start",
                "start",
                vec![Property::string("greeting")],
                vec![],
                NodeKind::Start,
            ),
            node(
                "shout",
                "shout",
                vec![Property::string("greeting")],
                vec![Property::string("greeting")],
                NodeKind::Tool {
                    tool: "upper_tool".into(),
                },
            ),
            node(
                "say",
                "say",
                vec![Property::string("greeting")],
                vec![],
                NodeKind::OutputMessage {
                    message_template: "{{greeting}}!".into(),
                },
            ),
            node(
                "end",
                "end",
                vec![],
                vec![Property::string("greeting")],
                NodeKind::End,
            ),
            cf_edge("start_to_shout", "start", None, "shout"),
            cf_edge("shout_to_say", "shout", None, "say"),
            cf_edge("say_to_end", "say", None, "end"),
            flow_component(FlowParts {
                id: "flow",
                name: "Name-based greeting",
                start: "start",
                nodes: vec!["start", "shout", "say", "end"],
                control: vec!["start_to_shout", "shout_to_say", "say_to_end"],
                data: None,
                inputs: vec![Property::string("greeting")],
                outputs: vec![Property::string("greeting")],
            }),
        ],
    );
    finish(b, "flow")
}

// ----------------------------------------------------------------------
// cases
// ----------------------------------------------------------------------

pub struct CaseRun {
    pub scenario: Scenario,
    pub expected: CaseOutcome,
}

pub struct CorpusCase {
    pub name: &'static str,
    pub document: SpecDocument,
    /// Static (round-trip and validation only) when absent.
    pub run: Option<CaseRun>,
}

fn scenario(entry: &str, inputs: Map<String, Value>) -> Scenario {
    Scenario {
        entry_id: entry.to_string(),
        inputs,
        script: None,
        resume: Vec::new(),
        tools: BTreeMap::new(),
        step_limit: None,
    }
}

fn finished(pairs: &[(&str, Value)]) -> CaseOutcome {
    CaseOutcome::Finished {
        outputs: object(pairs),
    }
}

pub fn corpus_cases() -> Vec<CorpusCase> {
    let mut cases = Vec::new();

    {
        let mut s = scenario("flow", object(&[("prompt", json!("hi"))]));
        s.script = Some(json!({
            "rules": [{"when": {"contains": "hi"}, "respond": {"text": "hello"}}]
        }));
        cases.push(CorpusCase {
            name: "simple_prompt",
            document: simple_prompt_document(),
            run: Some(CaseRun {
                scenario: s,
                expected: finished(&[("llm_output", json!("hello"))]),
            }),
        });
    }

    for (name, choice, value) in [
        ("converge_left", "left", "went-left"),
        ("converge_right", "right", "went-right"),
    ] {
        let mut s = scenario(
            "flow",
            object(&[("choice", json!(choice)), ("seed", json!("s"))]),
        );
        s.tools.insert(
            "mark_left".to_string(),
            StubBehavior::Const {
                value: object(&[("v", json!("went-left"))]),
            },
        );
        s.tools.insert(
            "mark_right".to_string(),
            StubBehavior::Const {
                value: object(&[("v", json!("went-right"))]),
            },
        );
        cases.push(CorpusCase {
            name,
            document: converge_document(),
            run: Some(CaseRun {
                scenario: s,
                expected: finished(&[("v", json!(value))]),
            }),
        });
    }

    {
        let mut s = scenario("flow", object(&[("x", json!(1))]));
        s.tools
            .insert("increment".to_string(), StubBehavior::Named("increment".into()));
        cases.push(CorpusCase {
            name: "self_loop",
            document: self_loop_document(),
            run: Some(CaseRun {
                scenario: s,
                expected: finished(&[("x", json!(4))]),
            }),
        });
    }

    {
        let mut s = scenario("flow", object(&[("x", json!([1, 2, 3]))]));
        s.tools
            .insert("double".to_string(), StubBehavior::Named("double".into()));
        cases.push(CorpusCase {
            name: "map_double",
            document: map_document(),
            run: Some(CaseRun {
                scenario: s,
                expected: finished(&[("y", json!([2, 4, 6]))]),
            }),
        });
    }

    {
        let mut s = scenario("flow", object(&[("x", json!(21))]));
        s.tools
            .insert("double".to_string(), StubBehavior::Named("double".into()));
        cases.push(CorpusCase {
            name: "flow_nested",
            document: flow_nested_document(),
            run: Some(CaseRun {
                scenario: s,
                expected: finished(&[("y", json!(42))]),
            }),
        });
    }

    cases.push(CorpusCase {
        name: "branching_default",
        document: branching_default_document(),
        run: Some(CaseRun {
            scenario: scenario("flow", object(&[("v", json!("maybe"))])),
            expected: finished(&[("msg", json!("fell through"))]),
        }),
    });

    {
        let mut s = scenario("flow", object(&[("country", json!("France"))]));
        s.resume = vec![ResumeSpec::User {
            user_message: "Paris".to_string(),
        }];
        cases.push(CorpusCase {
            name: "ask_user",
            document: ask_user_document(),
            run: Some(CaseRun {
                scenario: s,
                expected: finished(&[("reply", json!("Paris"))]),
            }),
        });
    }

    {
        let mut s = scenario("researcher", object(&[("topic", json!("geography"))]));
        s.script = Some(json!({
            "rules": [
                {"when": {"position": 0},
                 "respond": {"tool_call": {"name": "lookup", "args": {"q": "x"}}}},
                {"when": {"position": 1}, "respond": {"final": {"answer": "y"}}}
            ]
        }));
        s.tools.insert(
            "lookup".to_string(),
            StubBehavior::Const {
                value: object(&[("answer", json!("y"))]),
            },
        );
        cases.push(CorpusCase {
            name: "agent_server_tool",
            document: agent_server_tool_document(),
            run: Some(CaseRun {
                scenario: s,
                expected: finished(&[("answer", json!("y"))]),
            }),
        });
    }

    {
        let mut s = scenario("browser", object(&[("topic", json!("a page"))]));
        s.script = Some(json!({
            "rules": [
                {"when": {"position": 0},
                 "respond": {"tool_call": {"name": "fetch_page", "args": {"url": "http://example"}}}},
                {"when": {"position": 1}, "respond": {"final": {"answer": "done"}}}
            ]
        }));
        s.resume = vec![ResumeSpec::ClientTool {
            client_tool_result: super::conformance::ClientToolResultSpec {
                call_id: "call_1".to_string(),
                outputs: object(&[("content", json!("ok"))]),
            },
        }];
        cases.push(CorpusCase {
            name: "agent_client_tool",
            document: agent_client_tool_document(),
            run: Some(CaseRun {
                scenario: s,
                expected: finished(&[("answer", json!("done"))]),
            }),
        });
    }

    {
        let mut s = scenario("guide", object(&[("topic", json!("capitals"))]));
        s.script = Some(json!({
            "rules": [
                {"when": {"position": 0}, "respond": {"text": "Which city?"}},
                {"when": {"position": 1}, "respond": {"final": {"answer": "Paris"}}}
            ]
        }));
        s.resume = vec![ResumeSpec::User {
            user_message: "Paris".to_string(),
        }];
        cases.push(CorpusCase {
            name: "agent_chat",
            document: agent_chat_document(),
            run: Some(CaseRun {
                scenario: s,
                expected: finished(&[("answer", json!("Paris"))]),
            }),
        });
    }

    {
        let mut s = scenario("spinner", Map::new());
        s.script = Some(json!({
            "rules": [
                {"when": {"position": 0}, "respond": {"tool_call": {"name": "noop"}}},
                {"when": {"position": 1}, "respond": {"tool_call": {"name": "noop"}}},
                {"when": {"position": 2}, "respond": {"tool_call": {"name": "noop"}}}
            ]
        }));
        s.tools.insert(
            "noop".to_string(),
            StubBehavior::Const {
                value: object(&[("ok", json!(true))]),
            },
        );
        cases.push(CorpusCase {
            name: "agent_max_turns",
            document: agent_max_turns_document(),
            run: Some(CaseRun {
                scenario: s,
                expected: CaseOutcome::Error {
                    error: "MaxTurnsExceeded".to_string(),
                },
            }),
        });
    }

    {
        let mut s = scenario("flow", object(&[("topic", json!("rust"))]));
        s.script = Some(json!({
            "rules": [
                {"when": {"position": 0},
                 "respond": {"tool_call": {"name": "lookup", "args": {"q": "rust"}}}},
                {"when": {"position": 1}, "respond": {"final": {"answer": "42"}}}
            ]
        }));
        s.tools.insert(
            "lookup".to_string(),
            StubBehavior::Const {
                value: object(&[("answer", json!("42"))]),
            },
        );
        cases.push(CorpusCase {
            name: "agent_in_flow",
            document: agent_in_flow_document(),
            run: Some(CaseRun {
                scenario: s,
                expected: finished(&[("answer", json!("42"))]),
            }),
        });
    }

    {
        let mut s = scenario("flow", object(&[("q", json!("6*7"))]));
        s.resume = vec![ResumeSpec::ClientTool {
            client_tool_result: super::conformance::ClientToolResultSpec {
                call_id: "call_1".to_string(),
                outputs: object(&[("result", json!("42"))]),
            },
        }];
        cases.push(CorpusCase {
            name: "client_tool_in_flow",
            document: client_tool_in_flow_document(),
            run: Some(CaseRun {
                scenario: s,
                expected: finished(&[("result", json!("42"))]),
            }),
        });
    }

    cases.push(CorpusCase {
        name: "http_static",
        document: http_static_document(),
        run: None,
    });

    {
        let mut s = scenario("flow", object(&[("greeting", json!("hey"))]));
        s.tools
            .insert("upper".to_string(), StubBehavior::Named("upper".into()));
        cases.push(CorpusCase {
            name: "name_based",
            document: name_based_document(),
            run: Some(CaseRun {
                scenario: s,
                expected: finished(&[("greeting", json!("HEY"))]),
            }),
        });
    }

    cases
}

/// Writes the corpus to disk: for runnable cases the scenario is executed
/// and must produce the hand-computed expected outcome before anything is
/// frozen.
pub fn write_corpus(root: &Path) -> Result<(), HarnessError> {
    for case in corpus_cases() {
        let dir = root.join(case.name);
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("spec.json"), serialize(&case.document, Format::Json))?;
        if let Some(run) = case.run {
            let document = Arc::new(case.document);
            let (outcome, trace) = run_scenario(&document, &run.scenario)?;
            if outcome != run.expected {
                return Err(HarnessError::CaseLoad {
                    path: case.name.to_string(),
                    reason: format!(
                        "outcome {} does not match the expected {}",
                        serde_json::to_string(&outcome).unwrap_or_default(),
                        serde_json::to_string(&run.expected).unwrap_or_default()
                    ),
                });
            }
            let mut scenario_text =
                serde_json::to_string_pretty(&run.scenario).expect("scenario serializes");
            scenario_text.push('\n');
            std::fs::write(dir.join("scenario.json"), scenario_text)?;
            let mut expected_text =
                serde_json::to_string_pretty(&run.expected).expect("outcome serializes");
            expected_text.push('\n');
            std::fs::write(dir.join("expected.json"), expected_text)?;
            std::fs::write(dir.join("trace.golden"), trace)?;
        }
    }
    Ok(())
}

// ----------------------------------------------------------------------
// seeded defects
// ----------------------------------------------------------------------

pub struct DefectSpec {
    pub file_name: String,
    pub text: String,
    pub code: DiagnosticCode,
    pub component_id: String,
}

fn doc_value(document: &SpecDocument) -> Value {
    serde_json::from_str(&serialize(document, Format::Json)).expect("canonical JSON parses")
}

fn render_value(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    text
}

fn defect(
    file_stem: &str,
    value: Value,
    code: DiagnosticCode,
    component_id: &str,
) -> DefectSpec {
    DefectSpec {
        file_name: format!("{file_stem}.json"),
        text: render_value(&value),
        code,
        component_id: component_id.to_string(),
    }
}

/// Targeted mutations, each planting exactly one error-severity diagnostic
/// at a known component.
pub fn seeded_defects() -> Vec<DefectSpec> {
    let mut defects = Vec::new();

    // an extra edge from the same (node, branch)
    let mut v = doc_value(&simple_prompt_document());
    v["control_flow_connections"]
        .as_array_mut()
        .expect("edges")
        .push(json!({
            "component_type": "ControlFlowEdge",
            "description": null,
            "from_branch": null,
            "from_node": "$component_ref:start",
            "id": "dup_edge",
            "metadata": null,
            "name": "dup_edge",
            "to_node": "$component_ref:end"
        }));
    defects.push(defect(
        "duplicate_branch_edge",
        v,
        DiagnosticCode::CfDuplicateBranch,
        "dup_edge",
    ));

    // reference to an id that is never declared
    let mut v = doc_value(&simple_prompt_document());
    v["start_node"] = json!("$component_ref:zzz");
    defects.push(defect(
        "dangling_reference",
        v,
        DiagnosticCode::DanglingReference,
        "zzz",
    ));

    // no version marker at the top level
    let mut v = doc_value(&simple_prompt_document());
    v.as_object_mut().expect("object").remove("agentspec_version");
    defects.push(defect(
        "missing_version",
        v,
        DiagnosticCode::MissingVersion,
        DOCUMENT_TARGET,
    ));

    // the start node expanded a second time instead of referenced
    let mut v = doc_value(&simple_prompt_document());
    let start_object = v["control_flow_connections"][0]["from_node"].clone();
    v["start_node"] = start_object;
    defects.push(defect(
        "duplicate_declaration",
        v,
        DiagnosticCode::DuplicateDeclaration,
        "start",
    ));

    // a component type nobody claims
    let mut v = doc_value(&simple_prompt_document());
    v["control_flow_connections"][0]["to_node"]["llm_config"]["component_type"] =
        json!("MemoryStub");
    defects.push(defect(
        "unknown_component_type",
        v,
        DiagnosticCode::UnknownComponentType,
        "vllm_config",
    ));

    // agent stripped of its LLM
    let mut v = doc_value(&agent_server_tool_document());
    v["llm_config"] = Value::Null;
    defects.push(defect(
        "agent_missing_llm",
        v,
        DiagnosticCode::AgentMissingLlm,
        "researcher",
    ));

    // flow with no start node at all
    let mut b = DocumentBuilder::new();
    insert_all(
        &mut b,
        vec![
            Component::new(
                "cfg",
                "cfg",
                ComponentKind::LlmConfig(LlmConfig::generic()),
            ),
            node(
                "greet",
                "greet",
                vec![],
                vec![Property::string("text")],
                NodeKind::Llm {
                    llm_config: "cfg".into(),
                    prompt_template: "say hello".into(),
                },
            ),
            node(
                "end",
                "end",
                vec![],
                vec![Property::string("text")],
                NodeKind::End,
            ),
            cf_edge("greet_to_end", "greet", None, "end"),
            df_edge("text_edge", "greet", "text", "end", "text"),
            flow_component(FlowParts {
                id: "flow",
                name: "No entry",
                start: "greet",
                nodes: vec!["greet", "end"],
                control: vec!["greet_to_end"],
                data: Some(vec!["text_edge"]),
                inputs: vec![],
                outputs: vec![Property::string("text")],
            }),
        ],
    );
    defects.push(defect(
        "missing_start",
        doc_value(&finish(b, "flow")),
        DiagnosticCode::FlowMissingStart,
        "flow",
    ));

    // string output wired into an integer input
    let mut v = doc_value(&simple_prompt_document());
    let retype = json!([{"title": "llm_output", "type": "integer"}]);
    v["control_flow_connections"][1]["to_node"]["outputs"] = retype.clone();
    v["outputs"] = retype;
    defects.push(defect(
        "df_type_mismatch",
        v,
        DiagnosticCode::DfTypeMismatch,
        "llm_output_edge",
    ));

    // declared input disagrees with the inferred template input
    let mut v = doc_value(&simple_prompt_document());
    v["control_flow_connections"][0]["to_node"]["inputs"] =
        json!([{"title": "question", "type": "string"}]);
    v["data_flow_connections"][0]["destination_input"] = json!("question");
    defects.push(defect(
        "io_declaration_mismatch",
        v,
        DiagnosticCode::IoDeclarationMismatch,
        "llm_node",
    ));

    // a branching branch with no outgoing edge: extend the mapping with a
    // branch nobody wired (the gate expands inside the first control edge)
    let mut v = doc_value(&converge_document());
    v["control_flow_connections"][0]["to_node"]["mapping"]["middle"] = json!("go_middle");
    defects.push(defect(
        "cf_dangling_branch",
        v,
        DiagnosticCode::CfDanglingBranch,
        "gate",
    ));

    // data edge endpoint outside the flow
    let mut v = doc_value(&simple_prompt_document());
    v["data_flow_connections"][1]["destination_node"] = json!({
        "component_type": "OutputMessageNode",
        "description": null,
        "id": "orphan",
        "inputs": [{"title": "llm_output", "type": "string"}],
        "message_template": "{{llm_output}}",
        "metadata": null,
        "name": "orphan",
        "outputs": []
    });
    defects.push(defect(
        "df_foreign_node",
        v,
        DiagnosticCode::DfForeignNode,
        "llm_output_edge",
    ));

    // data edge naming an output the source node does not expose
    let mut v = doc_value(&simple_prompt_document());
    v["data_flow_connections"][1]["source_output"] = json!("bogus");
    defects.push(defect(
        "df_unknown_property",
        v,
        DiagnosticCode::DfUnknownProperty,
        "llm_output_edge",
    ));

    // the same tool listed twice on one agent
    let mut v = doc_value(&agent_server_tool_document());
    v["tools"]
        .as_array_mut()
        .expect("tools")
        .push(json!("$component_ref:lookup_tool"));
    defects.push(defect(
        "tool_name_conflict",
        v,
        DiagnosticCode::ToolNameConflict,
        "researcher",
    ));

    defects
}

/// Writes the defect corpus: one JSON file per defect plus a manifest
/// recording the planted code and component id.
pub fn write_defects(root: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(root)?;
    let mut manifest = Vec::new();
    for defect in seeded_defects() {
        std::fs::write(root.join(&defect.file_name), &defect.text)?;
        manifest.push(json!({
            "code": defect.code.as_str(),
            "component_id": defect.component_id,
            "file": defect.file_name,
        }));
    }
    let mut text = serde_json::to_string_pretty(&Value::Array(manifest)).expect("serializes");
    text.push('\n');
    std::fs::write(root.join("manifest.json"), text)?;
    Ok(())
}

// ----------------------------------------------------------------------
// toy dataset
// ----------------------------------------------------------------------

const TOY_QA: [(&str, &str, &str, &str); 20] = [
    ("qa01", "What is the capital of France?", "capital of France", "Paris"),
    ("qa02", "Which mountain is the highest on Earth?", "highest on Earth", "Mount Everest"),
    ("qa03", "What is the largest planet?", "largest planet", "Jupiter"),
    ("qa04", "Who wrote Hamlet?", "wrote Hamlet", "William Shakespeare"),
    ("qa05", "What is the chemical symbol for gold?", "symbol for gold", "Au"),
    ("qa06", "What is the square root of 81?", "square root of 81", "9"),
    ("qa07", "What is the capital of Japan?", "capital of Japan", "Tokyo"),
    ("qa08", "Which river is the longest in the world?", "longest in the world", "Nile"),
    ("qa09", "What is the smallest prime number?", "smallest prime", "2"),
    ("qa10", "What is the capital of Italy?", "capital of Italy", "Rome"),
    ("qa11", "What is the chemical formula of water?", "formula of water", "H2O"),
    ("qa12", "How many continents are there?", "many continents", "7"),
    ("qa13", "What is the capital of Spain?", "capital of Spain", "Madrid"),
    ("qa14", "Which planet is known as the red planet?", "red planet", "Mars"),
    ("qa15", "What is the first element in the periodic table?", "first element", "Hydrogen"),
    ("qa16", "What is the largest ocean?", "largest ocean", "Pacific Ocean"),
    ("qa17", "How many days are in a leap year?", "leap year", "366"),
    ("qa18", "What is the capital of Egypt?", "capital of Egypt", "Cairo"),
    ("qa19", "What is the capital of Germany?", "capital of Germany", "Berlin"),
    ("qa20", "How many sides does a hexagon have?", "hexagon", "6"),
];

/// Scripted answers: two records answer with extra tokens, so exact-match
/// scores 0.9 and token F1 lands strictly between 0.9 and 1.0.
fn scripted_answer(id: &str, gold: &str) -> String {
    match id {
        "qa01" => format!("{gold} France"),
        "qa02" => format!("{gold} peak"),
        _ => gold.to_string(),
    }
}

/// The bundled QA records as line-delimited JSON.
pub fn toy_qa_records_text() -> String {
    let mut out = String::new();
    for (id, question, _, gold) in TOY_QA {
        let record = json!({
            "expected": gold,
            "id": id,
            "inputs": {"prompt": question},
        });
        out.push_str(&record.to_string());
        out.push('\n');
    }
    out
}

/// The mock script answering the bundled records.
pub fn toy_qa_script_text() -> String {
    let rules: Vec<Value> = TOY_QA
        .iter()
        .map(|(id, _, needle, gold)| {
            json!({
                "respond": {"text": scripted_answer(id, gold)},
                "when": {"contains": needle},
            })
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&json!({"rules": rules})).expect("serializes");
    text.push('\n');
    text
}

pub fn write_toy_dataset(dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("toy_qa.jsonl"), toy_qa_records_text())?;
    std::fs::write(dir.join("toy_qa_script.json"), toy_qa_script_text())?;
    Ok(())
}

/// Entry id of the document the toy dataset drives.
pub const TOY_QA_ENTRY: &str = "flow";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::validate_document;

    #[test]
    fn every_corpus_document_validates_clean() {
        for case in corpus_cases() {
            let diagnostics = validate_document(&case.document);
            assert!(
                diagnostics.is_empty(),
                "case {}: {:?}",
                case.name,
                diagnostics
            );
        }
    }

    #[test]
    fn corpus_covers_every_node_type_and_tool_class() {
        let mut types = std::collections::BTreeSet::new();
        for case in corpus_cases() {
            for component in case.document.components() {
                types.insert(component.component_type().to_string());
            }
        }
        for required in [
            "StartNode",
            "EndNode",
            "LlmNode",
            "ApiNode",
            "AgentNode",
            "FlowNode",
            "MapNode",
            "BranchingNode",
            "ToolNode",
            "InputMessageNode",
            "OutputMessageNode",
            "ServerTool",
            "ClientTool",
            "RemoteTool",
            "MCPTool",
            "Agent",
            "Flow",
            "LlmConfig",
            "VllmConfig",
            "ControlFlowEdge",
            "DataFlowEdge",
        ] {
            assert!(types.contains(required), "missing {required}");
        }
    }

    #[test]
    fn corpus_ids_distinct_and_branches_non_empty() {
        for case in corpus_cases() {
            let mut ids = std::collections::BTreeSet::new();
            for component in case.document.components() {
                assert!(ids.insert(component.id().clone()), "case {}", case.name);
                if let Some(node) = component.as_node() {
                    let branches = crate::model::branches_of(node);
                    if matches!(node.kind, NodeKind::End) {
                        assert!(branches.is_empty());
                    } else {
                        assert!(!branches.is_empty(), "case {}: {}", case.name, component.id());
                    }
                }
            }
        }
    }

    #[test]
    fn defect_corpus_has_at_least_ten_distinct_mutations() {
        let defects = seeded_defects();
        assert!(defects.len() >= 10, "only {} defects", defects.len());
        let names: std::collections::BTreeSet<_> =
            defects.iter().map(|d| d.file_name.clone()).collect();
        assert_eq!(names.len(), defects.len());
    }
}
