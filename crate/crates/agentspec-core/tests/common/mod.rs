//! Shared helpers for integration tests: a random acyclic flow generator
//! with deterministic tool nodes, and runners for both binding modes.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::Rng;
use serde_json::{Map, Value};

use agentspec_core::backend::{MockScript, ToolRegistry};
use agentspec_core::document::{DocumentBuilder, SpecDocument};
use agentspec_core::engine::{
    Environment, EngineError, ExecutionSession, ExecutionStatus, SessionOptions,
};
use agentspec_core::model::{
    Component, ComponentKind, ControlFlowEdge, Flow, Node, NodeKind, Tool, ToolKind,
};
use agentspec_core::property::Property;

pub const NAME_POOL: [&str; 4] = ["a", "b", "c", "d"];

/// A linear flow of deterministic tool nodes with randomly wired names, in
/// name-based mode. Each middle node reads one or two pool variables and
/// overwrites one of them via its own registered transform.
pub fn random_name_based_flow(rng: &mut StdRng) -> SpecDocument {
    let middle_count = rng.gen_range(1..=6);
    let mut b = DocumentBuilder::new();

    let pool_props = || NAME_POOL.iter().map(|n| Property::string(n)).collect::<Vec<_>>();
    b.insert(Component::new(
        "start",
        "start",
        ComponentKind::Node(Node {
            inputs: pool_props(),
            outputs: vec![],
            kind: NodeKind::Start,
        }),
    ))
    .unwrap();
    b.insert(Component::new(
        "end",
        "end",
        ComponentKind::Node(Node {
            inputs: vec![],
            outputs: pool_props(),
            kind: NodeKind::End,
        }),
    ))
    .unwrap();

    let mut node_ids = vec!["start".to_string()];
    for index in 0..middle_count {
        let input_count = rng.gen_range(1..=2);
        let mut inputs = Vec::new();
        while inputs.len() < input_count {
            let name = NAME_POOL[rng.gen_range(0..NAME_POOL.len())];
            if !inputs.contains(&name) {
                inputs.push(name);
            }
        }
        let output = NAME_POOL[rng.gen_range(0..NAME_POOL.len())];
        let tool_id = format!("xform_{index}_tool");
        let node_id = format!("m{index}");
        b.insert(
            Component::new(
                &tool_id,
                format!("xform_{index}"),
                ComponentKind::Tool(Tool {
                    inputs: inputs.iter().map(|n| Property::string(n)).collect(),
                    outputs: vec![Property::string(output)],
                    kind: ToolKind::Server,
                }),
            )
            .with_description("deterministic test transform"),
        )
        .unwrap();
        b.insert(Component::new(
            &node_id,
            &node_id,
            ComponentKind::Node(Node {
                inputs: inputs.iter().map(|n| Property::string(n)).collect(),
                outputs: vec![Property::string(output)],
                kind: NodeKind::Tool {
                    tool: tool_id.as_str().into(),
                },
            }),
        ))
        .unwrap();
        node_ids.push(node_id);
    }
    node_ids.push("end".to_string());

    let mut edges = Vec::new();
    for (index, pair) in node_ids.windows(2).enumerate() {
        let edge_id = format!("e{index}");
        b.insert(Component::new(
            &edge_id,
            &edge_id,
            ComponentKind::ControlFlowEdge(ControlFlowEdge {
                from_node: pair[0].as_str().into(),
                from_branch: None,
                to_node: pair[1].as_str().into(),
            }),
        ))
        .unwrap();
        edges.push(edge_id);
    }

    b.insert(Component::new(
        "flow",
        "random flow",
        ComponentKind::Flow(Flow {
            start_node: "start".into(),
            nodes: node_ids.iter().map(|n| n.as_str().into()).collect(),
            control_flow_connections: edges.iter().map(|e| e.as_str().into()).collect(),
            data_flow_connections: None,
            inputs: pool_props(),
            outputs: pool_props(),
        }),
    ))
    .unwrap();

    b.finish("flow".into()).unwrap()
}

/// Registers the deterministic transforms the generated flows call:
/// `xform_i(args) = "x<i>:" + sorted "k=v" argument pairs`, bound to each
/// tool's single declared output.
pub fn xform_registry(document: &SpecDocument) -> ToolRegistry {
    let mut registry = ToolRegistry::new();
    for component in document.components() {
        let Some(tool) = component.as_tool() else {
            continue;
        };
        let name = component.name().to_string();
        if !name.starts_with("xform_") {
            continue;
        }
        let output = tool.outputs[0].name().to_string();
        let tag = name.clone();
        registry.register(name, move |args: &Map<String, Value>| {
            let joined = args
                .iter()
                .map(|(k, v)| format!("{k}={}", v.as_str().unwrap_or_default()))
                .collect::<Vec<_>>()
                .join(",");
            let mut out = Map::new();
            out.insert(output.clone(), Value::String(format!("{tag}:{joined}")));
            Ok(out)
        });
    }
    registry
}

pub fn pool_inputs() -> BTreeMap<String, Value> {
    NAME_POOL
        .iter()
        .map(|n| (n.to_string(), Value::String(format!("init_{n}"))))
        .collect()
}

/// Runs a flow document to completion with the xform registry.
pub fn run_to_finish(
    document: &Arc<SpecDocument>,
    entry: &str,
    inputs: BTreeMap<String, Value>,
) -> Result<BTreeMap<String, Value>, EngineError> {
    let env = Environment::mock(MockScript::default()).with_tools(xform_registry(document));
    let (_, status) = ExecutionSession::start(
        Arc::clone(document),
        &entry.into(),
        inputs,
        env,
        SessionOptions::default(),
    )?;
    match status {
        ExecutionStatus::Finished { outputs } => Ok(outputs),
        other => panic!("expected a finished run, got {other:?}"),
    }
}
