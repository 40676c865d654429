//! The document: a resolved component graph plus its format version.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::model::{Component, ComponentId, ComponentKind, NodeKind};
use crate::property::PropertyError;

/// The format version this implementation targets. Other versions
/// deserialize with a warning diagnostic.
pub const SUPPORTED_VERSION: &str = "25.4.1";

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("document is missing the top-level `agentspec_version`")]
    MissingVersion,
    #[error("reference to undeclared component `{id}`")]
    DanglingReference { id: ComponentId },
    #[error("component `{id}` is declared more than once")]
    DuplicateDeclaration { id: ComponentId },
    #[error("unknown component type `{component_type}` (component `{id}`) and no plugin claims it")]
    UnknownComponentType { component_type: String, id: String },
    #[error("component `{id}` must be {expected}, found {found}")]
    WrongComponentKind {
        id: ComponentId,
        expected: &'static str,
        found: String,
    },
    #[error("plugin type `{component_type}` conflicts with an existing component type")]
    TypeConflict { component_type: String },
    #[error("invalid component id `{id}`: {reason}")]
    InvalidId { id: String, reason: &'static str },
    #[error("malformed component `{context}`: {reason}")]
    Malformed { context: String, reason: String },
    #[error("{format} parse error: {reason}")]
    Parse { format: &'static str, reason: String },
}

impl DocumentError {
    pub(crate) fn malformed(context: impl Into<String>, reason: impl std::fmt::Display) -> Self {
        DocumentError::Malformed {
            context: context.into(),
            reason: reason.to_string(),
        }
    }
}

impl From<(String, PropertyError)> for DocumentError {
    fn from((context, err): (String, PropertyError)) -> Self {
        DocumentError::malformed(context, err)
    }
}

/// A fully resolved document: every component declared exactly once, every
/// reference pointing at a declared component of the right kind.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecDocument {
    version: String,
    root: ComponentId,
    components: BTreeMap<ComponentId, Arc<Component>>,
}

impl SpecDocument {
    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn root_id(&self) -> &ComponentId {
        &self.root
    }

    pub fn root(&self) -> &Arc<Component> {
        self.components.get(&self.root).expect("root is declared")
    }

    pub fn component(&self, id: &ComponentId) -> Option<&Arc<Component>> {
        self.components.get(id)
    }

    pub fn contains(&self, id: &ComponentId) -> bool {
        self.components.contains_key(id)
    }

    /// All components in id order.
    pub fn components(&self) -> impl Iterator<Item = &Arc<Component>> {
        self.components.values()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn expect(&self, id: &ComponentId) -> Result<&Arc<Component>, DocumentError> {
        self.components
            .get(id)
            .ok_or_else(|| DocumentError::DanglingReference { id: id.clone() })
    }

    pub fn expect_kind<'a, T>(
        &'a self,
        id: &ComponentId,
        expected: &'static str,
        select: impl Fn(&'a Component) -> Option<&'a T>,
    ) -> Result<(&'a Arc<Component>, &'a T), DocumentError> {
        let component = self.expect(id)?;
        match select(component) {
            Some(inner) => Ok((component, inner)),
            None => Err(DocumentError::WrongComponentKind {
                id: id.clone(),
                expected,
                found: component.component_type().to_string(),
            }),
        }
    }

    /// Rebuilds a builder seeded with this document's components, for
    /// derived documents such as name-based compilation output.
    pub fn to_builder(&self) -> DocumentBuilder {
        DocumentBuilder {
            version: self.version.clone(),
            components: self.components.clone(),
        }
    }
}

/// Accumulates components and enforces structural integrity on `finish`:
/// unique ids, resolvable references, kind-correct reference targets.
#[derive(Debug, Default)]
pub struct DocumentBuilder {
    version: String,
    components: BTreeMap<ComponentId, Arc<Component>>,
}

impl DocumentBuilder {
    pub fn new() -> DocumentBuilder {
        DocumentBuilder {
            version: SUPPORTED_VERSION.to_string(),
            components: BTreeMap::new(),
        }
    }

    pub fn with_version(version: impl Into<String>) -> DocumentBuilder {
        DocumentBuilder {
            version: version.into(),
            components: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, component: Component) -> Result<ComponentId, DocumentError> {
        let id = component.id().clone();
        validate_id(id.as_str())?;
        if self.components.contains_key(&id) {
            return Err(DocumentError::DuplicateDeclaration { id });
        }
        self.components.insert(id.clone(), Arc::new(component));
        Ok(id)
    }

    /// Replaces an existing component, keeping its id.
    pub fn replace(&mut self, component: Component) -> ComponentId {
        let id = component.id().clone();
        self.components.insert(id.clone(), Arc::new(component));
        id
    }

    pub fn contains(&self, id: &ComponentId) -> bool {
        self.components.contains_key(id)
    }

    pub fn finish(self, root: ComponentId) -> Result<SpecDocument, DocumentError> {
        if !self.components.contains_key(&root) {
            return Err(DocumentError::DanglingReference { id: root });
        }
        for component in self.components.values() {
            check_references(component, &self.components)?;
        }
        Ok(SpecDocument {
            version: self.version,
            root,
            components: self.components,
        })
    }
}

fn validate_id(id: &str) -> Result<(), DocumentError> {
    if id.is_empty() {
        return Err(DocumentError::InvalidId {
            id: id.to_string(),
            reason: "must be non-empty",
        });
    }
    if id.starts_with('$') {
        return Err(DocumentError::InvalidId {
            id: id.to_string(),
            reason: "must not start with `$`",
        });
    }
    Ok(())
}

struct RefCheck<'a> {
    id: &'a ComponentId,
    expected: &'static str,
    accepts: fn(&Component) -> bool,
}

fn check_references(
    component: &Component,
    table: &BTreeMap<ComponentId, Arc<Component>>,
) -> Result<(), DocumentError> {
    let mut refs: Vec<RefCheck<'_>> = Vec::new();
    let is_node = |c: &Component| c.as_node().is_some();
    let is_flow = |c: &Component| c.as_flow().is_some();
    let is_tool = |c: &Component| c.as_tool().is_some();
    let is_agent = |c: &Component| c.as_agent().is_some();
    let is_llm = |c: &Component| c.as_llm_config().is_some();
    let is_cf_edge = |c: &Component| c.as_control_flow_edge().is_some();
    let is_df_edge = |c: &Component| c.as_data_flow_edge().is_some();

    match &component.kind {
        ComponentKind::Agent(agent) => {
            if let Some(id) = &agent.llm_config {
                refs.push(RefCheck {
                    id,
                    expected: "an LLM config",
                    accepts: is_llm,
                });
            }
            for id in &agent.tools {
                refs.push(RefCheck {
                    id,
                    expected: "a tool",
                    accepts: is_tool,
                });
            }
        }
        ComponentKind::Flow(flow) => {
            refs.push(RefCheck {
                id: &flow.start_node,
                expected: "a node",
                accepts: is_node,
            });
            for id in &flow.nodes {
                refs.push(RefCheck {
                    id,
                    expected: "a node",
                    accepts: is_node,
                });
            }
            for id in &flow.control_flow_connections {
                refs.push(RefCheck {
                    id,
                    expected: "a control flow edge",
                    accepts: is_cf_edge,
                });
            }
            for id in flow.data_flow_connections.iter().flatten() {
                refs.push(RefCheck {
                    id,
                    expected: "a data flow edge",
                    accepts: is_df_edge,
                });
            }
        }
        ComponentKind::Node(node) => match &node.kind {
            NodeKind::Llm { llm_config, .. } => refs.push(RefCheck {
                id: llm_config,
                expected: "an LLM config",
                accepts: is_llm,
            }),
            NodeKind::Agent { agent } => refs.push(RefCheck {
                id: agent,
                expected: "an agent",
                accepts: is_agent,
            }),
            NodeKind::Flow { flow } | NodeKind::Map { flow, .. } => refs.push(RefCheck {
                id: flow,
                expected: "a flow",
                accepts: is_flow,
            }),
            NodeKind::Tool { tool } => refs.push(RefCheck {
                id: tool,
                expected: "a tool",
                accepts: is_tool,
            }),
            _ => {}
        },
        ComponentKind::ControlFlowEdge(edge) => {
            refs.push(RefCheck {
                id: &edge.from_node,
                expected: "a node",
                accepts: is_node,
            });
            refs.push(RefCheck {
                id: &edge.to_node,
                expected: "a node",
                accepts: is_node,
            });
        }
        ComponentKind::DataFlowEdge(edge) => {
            refs.push(RefCheck {
                id: &edge.source_node,
                expected: "a node",
                accepts: is_node,
            });
            refs.push(RefCheck {
                id: &edge.destination_node,
                expected: "a node",
                accepts: is_node,
            });
        }
        ComponentKind::LlmConfig(_) | ComponentKind::Tool(_) | ComponentKind::Extension(_) => {}
    }

    for r in refs {
        match table.get(r.id) {
            None => {
                return Err(DocumentError::DanglingReference { id: r.id.clone() });
            }
            Some(target) if !(r.accepts)(target) => {
                return Err(DocumentError::WrongComponentKind {
                    id: r.id.clone(),
                    expected: r.expected,
                    found: target.component_type().to_string(),
                });
            }
            Some(_) => {}
        }
    }
    Ok(())
}
