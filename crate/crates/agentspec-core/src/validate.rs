//! Pre-execution static analysis.
//!
//! `validate_document` aggregates every check; an empty diagnostic list means
//! the document is valid. Diagnostics are a pure function of the document and
//! are emitted in a stable order (component id, then code, then message).

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::diagnostics::{document_error_diagnostic, sort_diagnostics, Diagnostic, DiagnosticCode};
use crate::document::SpecDocument;
use crate::model::{branches_of, Component, ComponentId, ComponentKind, Flow, Node, NodeKind};
use crate::property::{schema_compatible, Property, PropertyType};
use crate::template::extract_placeholders;

/// Runs every static check over the document.
pub fn validate_document(doc: &SpecDocument) -> Vec<Diagnostic> {
    let mut diagnostics = Vec::new();
    for component in doc.components() {
        match &component.kind {
            ComponentKind::Agent(agent) => {
                if agent.llm_config.is_none() {
                    diagnostics.push(Diagnostic::new(
                        DiagnosticCode::AgentMissingLlm,
                        component.id().as_str(),
                        "an agent must reference exactly one LLM config",
                    ));
                }
                let mut seen = BTreeSet::new();
                for tool_id in &agent.tools {
                    let Some(tool) = doc.component(tool_id) else {
                        continue;
                    };
                    if !seen.insert(tool.name().to_string()) {
                        diagnostics.push(Diagnostic::new(
                            DiagnosticCode::ToolNameConflict,
                            component.id().as_str(),
                            format!("duplicate tool name `{}`", tool.name()),
                        ));
                    }
                }
            }
            ComponentKind::Flow(flow) => {
                diagnostics.extend(check_flow_structure(doc, component, flow));
                diagnostics.extend(check_control_flow(doc, component));
                diagnostics.extend(check_data_flow(doc, component));
            }
            _ => {}
        }
        diagnostics.extend(infer_declared_io(doc, component));
    }
    sort_diagnostics(&mut diagnostics);
    diagnostics
}

/// One-stop analysis of a document text: deserialization failures map onto
/// the diagnostic vocabulary, successful parses run the full validator (plus
/// any deserializer warnings).
pub fn analyze_text(text: &str, format: crate::io::Format) -> Vec<Diagnostic> {
    match crate::io::deserialize(text, format) {
        Err(e) => vec![document_error_diagnostic(&e)],
        Ok(parsed) => {
            let mut diagnostics = parsed.warnings;
            diagnostics.extend(validate_document(&parsed.document));
            sort_diagnostics(&mut diagnostics);
            diagnostics
        }
    }
}

/// The unique start node of a flow, when it has one.
fn unique_start(doc: &SpecDocument, flow: &Flow) -> Option<(ComponentId, Node)> {
    let mut starts = flow.nodes.iter().filter_map(|id| {
        let node = doc.component(id)?.as_node()?;
        matches!(node.kind, NodeKind::Start).then(|| (id.clone(), node.clone()))
    });
    let first = starts.next()?;
    if starts.next().is_some() {
        return None;
    }
    Some(first)
}

fn check_flow_structure(
    doc: &SpecDocument,
    component: &Component,
    flow: &Flow,
) -> Vec<Diagnostic> {
    let mut diagnostics = Vec::new();
    let start_count = flow
        .nodes
        .iter()
        .filter(|id| {
            doc.component(id)
                .and_then(|c| c.as_node())
                .map(|n| matches!(n.kind, NodeKind::Start))
                .unwrap_or(false)
        })
        .count();
    match start_count {
        0 => diagnostics.push(Diagnostic::new(
            DiagnosticCode::FlowMissingStart,
            component.id().as_str(),
            "a flow must include a start node",
        )),
        1 => {
            let (start_id, _) = unique_start(doc, flow).expect("counted above");
            if flow.start_node != start_id {
                diagnostics.push(Diagnostic::new(
                    DiagnosticCode::FlowMissingStart,
                    component.id().as_str(),
                    format!(
                        "`start_node` references `{}` instead of the flow's start node `{start_id}`",
                        flow.start_node
                    ),
                ));
            }
        }
        n => diagnostics.push(Diagnostic::new(
            DiagnosticCode::FlowMultipleStart,
            component.id().as_str(),
            format!("a flow must include exactly one start node, found {n}"),
        )),
    }
    diagnostics
}

/// Control-flow checks: duplicate branches, dangling branches, unreachable
/// nodes, foreign endpoints, and unknown branch names.
pub fn check_control_flow(doc: &SpecDocument, component: &Component) -> Vec<Diagnostic> {
    let Some(flow) = component.as_flow() else {
        return Vec::new();
    };
    let mut diagnostics = Vec::new();
    let node_set: BTreeSet<&ComponentId> = flow.nodes.iter().collect();

    let mut covered: BTreeMap<(&ComponentId, String), usize> = BTreeMap::new();
    for edge_id in &flow.control_flow_connections {
        let Some(edge) = doc.component(edge_id).and_then(|c| c.as_control_flow_edge()) else {
            continue;
        };
        let mut endpoints_ok = true;
        for (role, endpoint) in [("from_node", &edge.from_node), ("to_node", &edge.to_node)] {
            if !node_set.contains(endpoint) {
                endpoints_ok = false;
                diagnostics.push(Diagnostic::new(
                    DiagnosticCode::CfForeignNode,
                    edge_id.as_str(),
                    format!("`{role}` references `{endpoint}`, which is not a node of this flow"),
                ));
            }
        }
        if !endpoints_ok {
            continue;
        }
        let branch = edge.effective_branch().to_string();
        if let Some(node) = doc.component(&edge.from_node).and_then(|c| c.as_node()) {
            if !branches_of(node).contains(&branch) {
                diagnostics.push(Diagnostic::new(
                    DiagnosticCode::CfUnknownBranch,
                    edge_id.as_str(),
                    format!("node `{}` has no branch `{branch}`", edge.from_node),
                ));
                continue;
            }
        }
        let count = covered.entry((&edge.from_node, branch.clone())).or_insert(0);
        *count += 1;
        if *count > 1 {
            diagnostics.push(Diagnostic::new(
                DiagnosticCode::CfDuplicateBranch,
                edge_id.as_str(),
                format!(
                    "more than one outgoing edge from branch `{branch}` of node `{}`",
                    edge.from_node
                ),
            ));
        }
    }

    for node_id in &flow.nodes {
        let Some(node) = doc.component(node_id).and_then(|c| c.as_node()) else {
            continue;
        };
        for branch in branches_of(node) {
            if !covered.contains_key(&(node_id, branch.clone())) {
                diagnostics.push(Diagnostic::new(
                    DiagnosticCode::CfDanglingBranch,
                    node_id.as_str(),
                    format!("branch `{branch}` has no outgoing edge"),
                ));
            }
        }
    }

    if let Some((start_id, _)) = unique_start(doc, flow) {
        let mut successors: BTreeMap<&ComponentId, Vec<&ComponentId>> = BTreeMap::new();
        for edge_id in &flow.control_flow_connections {
            if let Some(edge) = doc.component(edge_id).and_then(|c| c.as_control_flow_edge()) {
                if node_set.contains(&edge.from_node) && node_set.contains(&edge.to_node) {
                    successors
                        .entry(&edge.from_node)
                        .or_default()
                        .push(&edge.to_node);
                }
            }
        }
        let mut reachable: BTreeSet<ComponentId> = BTreeSet::new();
        let mut queue = VecDeque::from([start_id]);
        while let Some(id) = queue.pop_front() {
            if !reachable.insert(id.clone()) {
                continue;
            }
            for next in successors.get(&id).into_iter().flatten() {
                queue.push_back((*next).clone());
            }
        }
        for node_id in &flow.nodes {
            if !reachable.contains(node_id) {
                diagnostics.push(Diagnostic::new(
                    DiagnosticCode::CfUnreachable,
                    node_id.as_str(),
                    "node is not reachable from the start node",
                ));
            }
        }
    }

    diagnostics
}

/// Data-flow checks in explicit mode: property existence, schema
/// compatibility, and unwired inputs. Name-based flows bind at runtime, so
/// no edge checks apply.
pub fn check_data_flow(doc: &SpecDocument, component: &Component) -> Vec<Diagnostic> {
    let Some(flow) = component.as_flow() else {
        return Vec::new();
    };
    let Some(edges) = &flow.data_flow_connections else {
        return Vec::new();
    };
    let mut diagnostics = Vec::new();
    let node_set: BTreeSet<&ComponentId> = flow.nodes.iter().collect();
    let mut fed: BTreeSet<(&ComponentId, &str)> = BTreeSet::new();

    for edge_id in edges {
        let Some(edge) = doc.component(edge_id).and_then(|c| c.as_data_flow_edge()) else {
            continue;
        };
        let mut endpoints_ok = true;
        for (role, endpoint) in [
            ("source_node", &edge.source_node),
            ("destination_node", &edge.destination_node),
        ] {
            if !node_set.contains(endpoint) {
                endpoints_ok = false;
                diagnostics.push(Diagnostic::new(
                    DiagnosticCode::DfForeignNode,
                    edge_id.as_str(),
                    format!("`{role}` references `{endpoint}`, which is not a node of this flow"),
                ));
            }
        }
        if !endpoints_ok {
            continue;
        }
        let source_prop = doc
            .component(&edge.source_node)
            .and_then(|c| c.as_node())
            .and_then(|n| find_in(n.source_properties(), &edge.source_output).cloned());
        if source_prop.is_none() {
            diagnostics.push(Diagnostic::new(
                DiagnosticCode::DfUnknownProperty,
                edge_id.as_str(),
                format!(
                    "node `{}` exposes no output `{}`",
                    edge.source_node, edge.source_output
                ),
            ));
        }
        let destination_prop = doc
            .component(&edge.destination_node)
            .and_then(|c| c.as_node())
            .and_then(|n| find_in(n.sink_properties(), &edge.destination_input).cloned());
        match &destination_prop {
            Some(_) => {
                fed.insert((&edge.destination_node, edge.destination_input.as_str()));
            }
            None => {
                diagnostics.push(Diagnostic::new(
                    DiagnosticCode::DfUnknownProperty,
                    edge_id.as_str(),
                    format!(
                        "node `{}` accepts no input `{}`",
                        edge.destination_node, edge.destination_input
                    ),
                ));
            }
        }
        if let (Some(src), Some(dst)) = (&source_prop, &destination_prop) {
            if !schema_compatible(src, dst) {
                diagnostics.push(Diagnostic::new(
                    DiagnosticCode::DfTypeMismatch,
                    edge_id.as_str(),
                    format!(
                        "output `{}` ({}) is not compatible with input `{}` ({})",
                        edge.source_output,
                        src.type_kind(),
                        edge.destination_input,
                        dst.type_kind()
                    ),
                ));
            }
        }
    }

    // Multiple edges into one input are legal (recency decides at runtime).
    // An input with no edge and no default may still be bound at start, so it
    // only warrants a warning.
    for node_id in &flow.nodes {
        let Some(node) = doc.component(node_id).and_then(|c| c.as_node()) else {
            continue;
        };
        if matches!(node.kind, NodeKind::Start) {
            continue;
        }
        for prop in node.sink_properties() {
            if !fed.contains(&(node_id, prop.name())) && prop.default_value().is_none() {
                diagnostics.push(Diagnostic::new(
                    DiagnosticCode::DfUnboundInput,
                    node_id.as_str(),
                    format!("input `{}` has no incoming edge and no default", prop.name()),
                ));
            }
        }
    }

    diagnostics
}

fn find_in<'a>(props: &'a [Property], name: &str) -> Option<&'a Property> {
    props.iter().find(|p| p.name() == name)
}

fn signature(props: &[Property]) -> BTreeMap<String, PropertyType> {
    props
        .iter()
        .map(|p| (p.name().to_string(), p.type_kind()))
        .collect()
}

fn signature_names(sig: &BTreeMap<String, PropertyType>) -> String {
    let names: Vec<&str> = sig.keys().map(String::as_str).collect();
    names.join(", ")
}

/// Recomputes inferable I/O declarations and flags mismatches with the
/// declared lists.
pub fn infer_declared_io(doc: &SpecDocument, component: &Component) -> Vec<Diagnostic> {
    let mut diagnostics = Vec::new();
    let id = component.id().as_str().to_string();
    let mismatch =
        |message: String| Diagnostic::new(DiagnosticCode::IoDeclarationMismatch, &id, message);

    match &component.kind {
        ComponentKind::Flow(flow) => {
            if let Some((_, start)) = unique_start(doc, flow) {
                let declared = signature(&flow.inputs);
                let inferred = signature(&start.inputs);
                if declared != inferred {
                    diagnostics.push(mismatch(format!(
                        "flow inputs [{}] must equal its start node inputs [{}]",
                        signature_names(&declared),
                        signature_names(&inferred)
                    )));
                }
            }
            let mut union: BTreeMap<String, PropertyType> = BTreeMap::new();
            let mut conflicted = BTreeSet::new();
            for node_id in &flow.nodes {
                let Some(node) = doc.component(node_id).and_then(|c| c.as_node()) else {
                    continue;
                };
                if !matches!(node.kind, NodeKind::End) {
                    continue;
                }
                for prop in &node.outputs {
                    match union.get(prop.name()) {
                        Some(ty) if *ty != prop.type_kind() => {
                            conflicted.insert(prop.name().to_string());
                        }
                        _ => {
                            union.insert(prop.name().to_string(), prop.type_kind());
                        }
                    }
                }
            }
            for name in conflicted {
                diagnostics.push(mismatch(format!(
                    "end nodes declare output `{name}` with conflicting types"
                )));
            }
            let declared = signature(&flow.outputs);
            if declared != union {
                diagnostics.push(mismatch(format!(
                    "flow outputs [{}] must equal the union of its end node outputs [{}]",
                    signature_names(&declared),
                    signature_names(&union)
                )));
            }
        }
        ComponentKind::Node(node) => match &node.kind {
            NodeKind::Llm {
                prompt_template, ..
            } => match extract_placeholders(prompt_template) {
                Ok(placeholders) => {
                    let declared = signature(&node.inputs);
                    let inferred: BTreeMap<String, PropertyType> = placeholders
                        .into_iter()
                        .map(|name| (name, PropertyType::String))
                        .collect();
                    if declared != inferred {
                        diagnostics.push(mismatch(format!(
                            "declared inputs [{}] must equal the string inputs inferred from the prompt template [{}]",
                            signature_names(&declared),
                            signature_names(&inferred)
                        )));
                    }
                    if node.outputs.len() != 1
                        || node.outputs[0].type_kind() != PropertyType::String
                    {
                        diagnostics.push(mismatch(
                            "an LLM node must declare exactly one string output".to_string(),
                        ));
                    }
                }
                Err(e) => diagnostics.push(Diagnostic::new(
                    DiagnosticCode::MalformedComponent,
                    &id,
                    format!("prompt template: {e}"),
                )),
            },
            NodeKind::Flow { flow } => {
                if let Some(inner) = doc.component(flow).and_then(|c| c.as_flow()) {
                    diagnostics.extend(wrapper_exposure(&id, &node.inputs, &inner.inputs, "input", "flow"));
                    diagnostics.extend(wrapper_exposure(&id, &node.outputs, &inner.outputs, "output", "flow"));
                }
            }
            NodeKind::Agent { agent } => {
                if let Some(inner) = doc.component(agent).and_then(|c| c.as_agent()) {
                    diagnostics.extend(wrapper_exposure(&id, &node.inputs, &inner.inputs, "input", "agent"));
                    diagnostics.extend(wrapper_exposure(&id, &node.outputs, &inner.outputs, "output", "agent"));
                }
            }
            NodeKind::Tool { tool } => {
                if let Some(inner) = doc.component(tool).and_then(|c| c.as_tool()) {
                    diagnostics.extend(wrapper_exposure(&id, &node.inputs, &inner.inputs, "input", "tool"));
                    diagnostics.extend(wrapper_exposure(&id, &node.outputs, &inner.outputs, "output", "tool"));
                }
            }
            NodeKind::Map {
                flow,
                iterated_input,
            } => {
                if find_in(&node.inputs, iterated_input).is_none() {
                    diagnostics.push(mismatch(format!(
                        "iterated input `{iterated_input}` is not among the declared inputs"
                    )));
                }
                if let Some(inner) = doc.component(flow).and_then(|c| c.as_flow()) {
                    for prop in &node.inputs {
                        let Some(inner_prop) = find_in(&inner.inputs, prop.name()) else {
                            diagnostics.push(mismatch(format!(
                                "input `{}` does not exist on the mapped flow",
                                prop.name()
                            )));
                            continue;
                        };
                        if prop.name() == iterated_input {
                            if prop.type_kind() != PropertyType::Array {
                                diagnostics.push(mismatch(format!(
                                    "iterated input `{}` must be an array of the flow's element type",
                                    prop.name()
                                )));
                            } else if let Some(items) = prop.items_type() {
                                if items != inner_prop.type_kind() {
                                    diagnostics.push(mismatch(format!(
                                        "iterated input `{}` elements ({items}) must match the flow input type ({})",
                                        prop.name(),
                                        inner_prop.type_kind()
                                    )));
                                }
                            }
                        } else if !schema_compatible(prop, inner_prop) {
                            diagnostics.push(mismatch(format!(
                                "broadcast input `{}` ({}) must match the flow input type ({})",
                                prop.name(),
                                prop.type_kind(),
                                inner_prop.type_kind()
                            )));
                        }
                    }
                    for prop in &node.outputs {
                        let Some(inner_prop) = find_in(&inner.outputs, prop.name()) else {
                            diagnostics.push(mismatch(format!(
                                "output `{}` does not exist on the mapped flow",
                                prop.name()
                            )));
                            continue;
                        };
                        if prop.type_kind() != PropertyType::Array {
                            diagnostics.push(mismatch(format!(
                                "output `{}` must be an array lifted from the flow output",
                                prop.name()
                            )));
                        } else if let Some(items) = prop.items_type() {
                            if items != inner_prop.type_kind() {
                                diagnostics.push(mismatch(format!(
                                    "output `{}` elements ({items}) must match the flow output type ({})",
                                    prop.name(),
                                    inner_prop.type_kind()
                                )));
                            }
                        }
                    }
                }
            }
            NodeKind::Branching { branch_input, .. }
                if find_in(&node.inputs, branch_input).is_none() =>
            {
                diagnostics.push(mismatch(format!(
                    "branch input `{branch_input}` is not among the declared inputs"
                )));
            }
            _ => {}
        },
        _ => {}
    }
    diagnostics
}

/// A wrapper node exposes a subset of its inner component's I/O; every
/// exposed property must replicate the inner schema.
fn wrapper_exposure(
    id: &str,
    declared: &[Property],
    inner: &[Property],
    direction: &str,
    inner_kind: &str,
) -> Vec<Diagnostic> {
    let mut diagnostics = Vec::new();
    for prop in declared {
        match find_in(inner, prop.name()) {
            None => diagnostics.push(Diagnostic::new(
                DiagnosticCode::IoDeclarationMismatch,
                id,
                format!(
                    "{direction} `{}` does not exist on the wrapped {inner_kind}",
                    prop.name()
                ),
            )),
            Some(inner_prop) if !schema_compatible(prop, inner_prop) => {
                diagnostics.push(Diagnostic::new(
                    DiagnosticCode::IoDeclarationMismatch,
                    id,
                    format!(
                        "{direction} `{}` ({}) must replicate the wrapped {inner_kind}'s schema ({})",
                        prop.name(),
                        prop.type_kind(),
                        inner_prop.type_kind()
                    ),
                ))
            }
            Some(_) => {}
        }
    }
    diagnostics
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::DocumentBuilder;
    use crate::model::{Agent, ControlFlowEdge, DataFlowEdge, LlmConfig};

    struct FlowSpec {
        nodes: Vec<(&'static str, Node)>,
        control: Vec<(&'static str, &'static str, Option<&'static str>, &'static str)>,
        data: Vec<(&'static str, &'static str, &'static str, &'static str, &'static str)>,
        inputs: Vec<Property>,
        outputs: Vec<Property>,
    }

    fn build_flow(spec: FlowSpec) -> SpecDocument {
        let mut b = DocumentBuilder::new();
        let mut node_ids = Vec::new();
        for (id, node) in spec.nodes {
            node_ids.push(
                b.insert(Component::new(id, id, ComponentKind::Node(node)))
                    .unwrap(),
            );
        }
        let mut control = Vec::new();
        for (id, from, branch, to) in spec.control {
            control.push(
                b.insert(Component::new(
                    id,
                    id,
                    ComponentKind::ControlFlowEdge(ControlFlowEdge {
                        from_node: from.into(),
                        from_branch: branch.map(str::to_string),
                        to_node: to.into(),
                    }),
                ))
                .unwrap(),
            );
        }
        let mut data = Vec::new();
        for (id, src, out, dst, input) in spec.data {
            data.push(
                b.insert(Component::new(
                    id,
                    id,
                    ComponentKind::DataFlowEdge(DataFlowEdge {
                        source_node: src.into(),
                        source_output: out.into(),
                        destination_node: dst.into(),
                        destination_input: input.into(),
                    }),
                ))
                .unwrap(),
            );
        }
        b.insert(Component::new(
            "flow",
            "flow",
            ComponentKind::Flow(Flow {
                start_node: "start".into(),
                nodes: node_ids,
                control_flow_connections: control,
                data_flow_connections: Some(data),
                inputs: spec.inputs,
                outputs: spec.outputs,
            }),
        ))
        .unwrap();
        b.finish("flow".into()).unwrap()
    }

    fn start(inputs: Vec<Property>) -> Node {
        Node {
            inputs,
            outputs: vec![],
            kind: NodeKind::Start,
        }
    }

    fn end(outputs: Vec<Property>) -> Node {
        Node {
            inputs: vec![],
            outputs,
            kind: NodeKind::End,
        }
    }

    fn message_node(template: &str, inputs: Vec<Property>) -> Node {
        Node {
            inputs,
            outputs: vec![],
            kind: NodeKind::OutputMessage {
                message_template: template.into(),
            },
        }
    }

    fn codes(diags: &[Diagnostic]) -> Vec<(&str, &str)> {
        diags
            .iter()
            .map(|d| (d.code.as_str(), d.component_id.as_str()))
            .collect()
    }

    #[test]
    fn linear_flow_is_clean() {
        let doc = build_flow(FlowSpec {
            nodes: vec![
                ("start", start(vec![Property::string("x")])),
                ("say", message_node("{{x}}", vec![Property::string("x")])),
                ("end", end(vec![Property::string("x")])),
            ],
            control: vec![("e1", "start", None, "say"), ("e2", "say", None, "end")],
            data: vec![
                ("d1", "start", "x", "say", "x"),
                ("d2", "start", "x", "end", "x"),
            ],
            inputs: vec![Property::string("x")],
            outputs: vec![Property::string("x")],
        });
        assert_eq!(validate_document(&doc), vec![]);
    }

    #[test]
    fn duplicate_branch_edges_are_flagged() {
        let doc = build_flow(FlowSpec {
            nodes: vec![("start", start(vec![])), ("end", end(vec![]))],
            control: vec![("e1", "start", None, "end"), ("e2", "start", None, "end")],
            data: vec![],
            inputs: vec![],
            outputs: vec![],
        });
        let diags = validate_document(&doc);
        assert_eq!(codes(&diags), vec![("CF_DUPLICATE_BRANCH", "e2")]);
    }

    #[test]
    fn uncovered_branches_are_flagged_per_branch() {
        let mut mapping = BTreeMap::new();
        mapping.insert("yes".to_string(), "accept".to_string());
        mapping.insert("no".to_string(), "reject".to_string());
        let doc = build_flow(FlowSpec {
            nodes: vec![
                ("start", start(vec![Property::string("v")])),
                (
                    "gate",
                    Node {
                        inputs: vec![Property::string("v")],
                        outputs: vec![],
                        kind: NodeKind::Branching {
                            branch_input: "v".into(),
                            mapping,
                        },
                    },
                ),
                ("end", end(vec![])),
            ],
            control: vec![
                ("e1", "start", None, "gate"),
                ("e2", "gate", Some("accept"), "end"),
            ],
            data: vec![("d1", "start", "v", "gate", "v")],
            inputs: vec![Property::string("v")],
            outputs: vec![],
        });
        let diags = validate_document(&doc);
        assert_eq!(
            codes(&diags),
            vec![
                ("CF_DANGLING_BRANCH", "gate"),
                ("CF_DANGLING_BRANCH", "gate")
            ]
        );
        assert!(diags[0].message.contains("`default`"));
        assert!(diags[1].message.contains("`reject`"));
    }

    #[test]
    fn self_loop_is_legal() {
        let mut mapping = BTreeMap::new();
        mapping.insert("done".to_string(), "exit".to_string());
        let doc = build_flow(FlowSpec {
            nodes: vec![
                ("start", start(vec![Property::string("v")])),
                (
                    "gate",
                    Node {
                        inputs: vec![Property::string("v").with_default(serde_json::json!("go"))],
                        outputs: vec![],
                        kind: NodeKind::Branching {
                            branch_input: "v".into(),
                            mapping,
                        },
                    },
                ),
                ("end", end(vec![])),
            ],
            control: vec![
                ("e1", "start", None, "gate"),
                ("e2", "gate", Some("exit"), "end"),
                ("e3", "gate", Some("default"), "gate"),
            ],
            data: vec![("d1", "start", "v", "gate", "v")],
            inputs: vec![Property::string("v")],
            outputs: vec![],
        });
        assert_eq!(validate_document(&doc), vec![]);
    }

    #[test]
    fn unreachable_node_is_a_warning() {
        let doc = build_flow(FlowSpec {
            nodes: vec![
                ("start", start(vec![])),
                ("stray", message_node("hi", vec![])),
                ("end", end(vec![])),
            ],
            control: vec![("e1", "start", None, "end"), ("e2", "stray", None, "end")],
            data: vec![],
            inputs: vec![],
            outputs: vec![],
        });
        let diags = validate_document(&doc);
        assert_eq!(codes(&diags), vec![("CF_UNREACHABLE", "stray")]);
        assert!(!diags[0].is_error());
    }

    #[test]
    fn type_mismatch_and_unknown_property() {
        let doc = build_flow(FlowSpec {
            nodes: vec![
                ("start", start(vec![Property::string("s")])),
                ("end", end(vec![Property::integer("n")])),
            ],
            control: vec![("e1", "start", None, "end")],
            data: vec![
                ("d1", "start", "s", "end", "n"),
                ("d2", "start", "ghost", "end", "n"),
            ],
            inputs: vec![Property::string("s")],
            outputs: vec![Property::integer("n")],
        });
        let diags = validate_document(&doc);
        assert_eq!(
            codes(&diags),
            vec![("DF_TYPE_MISMATCH", "d1"), ("DF_UNKNOWN_PROPERTY", "d2")]
        );
    }

    #[test]
    fn converging_edges_into_one_input_are_legal() {
        let doc = build_flow(FlowSpec {
            nodes: vec![
                (
                    "start",
                    start(vec![Property::string("a"), Property::string("b")]),
                ),
                ("end", end(vec![Property::string("v")])),
            ],
            control: vec![("e1", "start", None, "end")],
            data: vec![
                ("d1", "start", "a", "end", "v"),
                ("d2", "start", "b", "end", "v"),
            ],
            inputs: vec![Property::string("a"), Property::string("b")],
            outputs: vec![Property::string("v")],
        });
        assert_eq!(validate_document(&doc), vec![]);
    }

    #[test]
    fn agent_without_llm_is_flagged() {
        let mut b = DocumentBuilder::new();
        b.insert(Component::new(
            "helper",
            "helper",
            ComponentKind::Agent(Agent {
                llm_config: None,
                tools: vec![],
                instructions: "hi".into(),
                inputs: vec![],
                outputs: vec![],
                max_turns: 10,
            }),
        ))
        .unwrap();
        let doc = b.finish("helper".into()).unwrap();
        let diags = validate_document(&doc);
        assert_eq!(codes(&diags), vec![("AGENT_MISSING_LLM", "helper")]);
    }

    #[test]
    fn flow_without_start_is_flagged() {
        let mut b = DocumentBuilder::new();
        b.insert(Component::new("only", "only", ComponentKind::Node(end(vec![]))))
            .unwrap();
        b.insert(Component::new(
            "flow",
            "flow",
            ComponentKind::Flow(Flow {
                start_node: "only".into(),
                nodes: vec!["only".into()],
                control_flow_connections: vec![],
                data_flow_connections: Some(vec![]),
                inputs: vec![],
                outputs: vec![],
            }),
        ))
        .unwrap();
        let doc = b.finish("flow".into()).unwrap();
        let diags = validate_document(&doc);
        assert_eq!(codes(&diags), vec![("FLOW_MISSING_START", "flow")]);
    }

    #[test]
    fn llm_node_declared_inputs_must_match_template() {
        let build = |input: &str| {
            let mut b = DocumentBuilder::new();
            b.insert(Component::new(
                "cfg",
                "cfg",
                ComponentKind::LlmConfig(LlmConfig::generic()),
            ))
            .unwrap();
            b.insert(Component::new(
                "ask",
                "ask",
                ComponentKind::Node(Node {
                    inputs: vec![Property::string(input)],
                    outputs: vec![Property::string("text")],
                    kind: NodeKind::Llm {
                        llm_config: "cfg".into(),
                        prompt_template: "{{prompt}}".into(),
                    },
                }),
            ))
            .unwrap();
            b.finish("ask".into()).unwrap()
        };
        let diags = validate_document(&build("question"));
        assert_eq!(codes(&diags), vec![("IO_DECLARATION_MISMATCH", "ask")]);
        assert_eq!(validate_document(&build("prompt")), vec![]);
    }

    #[test]
    fn foreign_endpoints_and_unknown_branches_are_flagged() {
        let mut b = DocumentBuilder::new();
        b.insert(Component::new("start", "start", ComponentKind::Node(start(vec![]))))
            .unwrap();
        b.insert(Component::new("end", "end", ComponentKind::Node(end(vec![]))))
            .unwrap();
        b.insert(Component::new(
            "outsider",
            "outsider",
            ComponentKind::Node(message_node("hi", vec![])),
        ))
        .unwrap();
        for (id, from, branch, to) in [
            ("ok_edge", "start", None, "end"),
            // endpoint outside the flow's node list
            ("stray_edge", "outsider", None::<&str>, "end"),
            // end nodes expose no branches
            ("weird_edge", "end", Some("next"), "start"),
        ] {
            b.insert(Component::new(
                id,
                id,
                ComponentKind::ControlFlowEdge(ControlFlowEdge {
                    from_node: from.into(),
                    from_branch: branch.map(str::to_string),
                    to_node: to.into(),
                }),
            ))
            .unwrap();
        }
        b.insert(Component::new(
            "flow",
            "flow",
            ComponentKind::Flow(Flow {
                start_node: "start".into(),
                nodes: vec!["start".into(), "end".into()],
                control_flow_connections: vec![
                    "ok_edge".into(),
                    "stray_edge".into(),
                    "weird_edge".into(),
                ],
                data_flow_connections: Some(vec![]),
                inputs: vec![],
                outputs: vec![],
            }),
        ))
        .unwrap();
        let doc = b.finish("flow".into()).unwrap();
        let diags = validate_document(&doc);
        assert_eq!(
            codes(&diags),
            vec![
                ("CF_FOREIGN_NODE", "stray_edge"),
                ("CF_UNKNOWN_BRANCH", "weird_edge"),
            ]
        );
    }

    #[test]
    fn two_start_nodes_are_flagged() {
        let mut b = DocumentBuilder::new();
        b.insert(Component::new("s1", "s1", ComponentKind::Node(start(vec![]))))
            .unwrap();
        b.insert(Component::new("s2", "s2", ComponentKind::Node(start(vec![]))))
            .unwrap();
        b.insert(Component::new("end", "end", ComponentKind::Node(end(vec![]))))
            .unwrap();
        for (id, from, to) in [("e1", "s1", "end"), ("e2", "s2", "end")] {
            b.insert(Component::new(
                id,
                id,
                ComponentKind::ControlFlowEdge(ControlFlowEdge {
                    from_node: from.into(),
                    from_branch: None,
                    to_node: to.into(),
                }),
            ))
            .unwrap();
        }
        b.insert(Component::new(
            "flow",
            "flow",
            ComponentKind::Flow(Flow {
                start_node: "s1".into(),
                nodes: vec!["s1".into(), "s2".into(), "end".into()],
                control_flow_connections: vec!["e1".into(), "e2".into()],
                data_flow_connections: Some(vec![]),
                inputs: vec![],
                outputs: vec![],
            }),
        ))
        .unwrap();
        let doc = b.finish("flow".into()).unwrap();
        let diags = validate_document(&doc);
        assert_eq!(codes(&diags), vec![("FLOW_MULTIPLE_START", "flow")]);
    }

    #[test]
    fn wrapper_exposure_with_altered_type_is_flagged() {
        let mut b = DocumentBuilder::new();
        b.insert(Component::new(
            "in_start",
            "in_start",
            ComponentKind::Node(start(vec![])),
        ))
        .unwrap();
        b.insert(Component::new(
            "in_end",
            "in_end",
            ComponentKind::Node(end(vec![
                Property::string("out").with_default(serde_json::json!("v"))
            ])),
        ))
        .unwrap();
        b.insert(Component::new(
            "e",
            "e",
            ComponentKind::ControlFlowEdge(ControlFlowEdge {
                from_node: "in_start".into(),
                from_branch: None,
                to_node: "in_end".into(),
            }),
        ))
        .unwrap();
        b.insert(Component::new(
            "inner",
            "inner",
            ComponentKind::Flow(Flow {
                start_node: "in_start".into(),
                nodes: vec!["in_start".into(), "in_end".into()],
                control_flow_connections: vec!["e".into()],
                data_flow_connections: Some(vec![]),
                inputs: vec![],
                outputs: vec![Property::string("out").with_default(serde_json::json!("v"))],
            }),
        ))
        .unwrap();
        b.insert(Component::new(
            "wrap",
            "wrap",
            ComponentKind::Node(Node {
                inputs: vec![],
                outputs: vec![Property::integer("out")],
                kind: NodeKind::Flow {
                    flow: "inner".into(),
                },
            }),
        ))
        .unwrap();
        let doc = b.finish("wrap".into()).unwrap();
        let diags = validate_document(&doc);
        assert_eq!(codes(&diags), vec![("IO_DECLARATION_MISMATCH", "wrap")]);
    }
}
