//! The execution engine: control-flow stepping, data binding with recency
//! precedence, conversation propagation, nesting, and suspend/resume.
//!
//! A session interprets one entry component (a flow or an agent) over an
//! immutable document. Nesting is explicit: one frame per active flow,
//! agent, or map iteration, so suspension can unwind to the caller and
//! resume exactly where it left off without threads or futures. No parallel
//! branches exist; node executions are totally ordered by a session-global
//! step counter, which is what the recency rule reads.

mod trace;

pub use trace::{trace_to_text, TraceEvent, TraceEventKind};

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::backend::{
    invoke_remote_tool, invoke_server_tool, tool_spec, BackendError, LlmBackend, LlmResponse,
    MockBackend, MockScript, ToolRegistry, ToolSpec,
};
use crate::document::{DocumentError, SpecDocument};
use crate::model::{
    value_to_text, Agent, Component, ComponentId, ComponentKind, DataFlowEdge, Flow, LlmConfig,
    Message, Node, NodeKind, Role, Tool, ToolKind, BRANCH_FALLBACK, DEFAULT_BRANCH,
};
use crate::property::{value_conforms, Property};
use crate::template::{render, TemplateError};

/// Default bound on executed nodes per session. Cycles are legal, so runs
/// need a terminating guard.
pub const DEFAULT_STEP_LIMIT: u64 = 1000;

#[derive(Debug, Clone, Copy)]
pub struct SessionOptions {
    pub step_limit: u64,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions {
            step_limit: DEFAULT_STEP_LIMIT,
        }
    }
}

/// Everything the engine needs from the host: a generation backend, the
/// server-tool registry, and an HTTP client for remote calls.
pub struct Environment {
    pub llm: Box<dyn LlmBackend>,
    pub tools: ToolRegistry,
    pub http: ureq::Agent,
}

impl Environment {
    pub fn new(llm: Box<dyn LlmBackend>) -> Environment {
        let http: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(std::time::Duration::from_secs(30)))
            .build()
            .into();
        Environment {
            llm,
            tools: ToolRegistry::new(),
            http,
        }
    }

    /// A deterministic environment driven by a mock script.
    pub fn mock(script: MockScript) -> Environment {
        Environment::new(Box::new(MockBackend::new(script)))
    }

    pub fn with_tools(mut self, tools: ToolRegistry) -> Environment {
        self.tools = tools;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExecutionStatus {
    Finished {
        outputs: BTreeMap<String, Value>,
    },
    AwaitingUserInput {
        prompt: Option<String>,
    },
    AwaitingClientTool {
        call_id: String,
        tool_name: String,
        args: Map<String, Value>,
    },
}

impl ExecutionStatus {
    pub fn to_json(&self) -> Value {
        match self {
            ExecutionStatus::Finished { outputs } => {
                let mut object = Map::new();
                object.insert(
                    "outputs".into(),
                    Value::Object(outputs.iter().map(|(k, v)| (k.clone(), v.clone())).collect()),
                );
                object.insert("status".into(), Value::String("finished".into()));
                Value::Object(object)
            }
            ExecutionStatus::AwaitingUserInput { prompt } => {
                let mut object = Map::new();
                object.insert(
                    "prompt".into(),
                    prompt.clone().map(Value::String).unwrap_or(Value::Null),
                );
                object.insert("status".into(), Value::String("awaiting_user_input".into()));
                Value::Object(object)
            }
            ExecutionStatus::AwaitingClientTool {
                call_id,
                tool_name,
                args,
            } => {
                let mut object = Map::new();
                object.insert("args".into(), Value::Object(args.clone()));
                object.insert("call_id".into(), Value::String(call_id.clone()));
                object.insert("status".into(), Value::String("awaiting_client_tool".into()));
                object.insert("tool_name".into(), Value::String(tool_name.clone()));
                Value::Object(object)
            }
        }
    }
}

/// What a suspended session accepts to continue.
#[derive(Debug, Clone, PartialEq)]
pub enum ResumePayload {
    UserMessage {
        text: String,
    },
    ClientToolResult {
        call_id: String,
        outputs: Map<String, Value>,
    },
}

#[derive(Debug, Error)]
pub enum NodeFailure {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("step limit of {limit} exceeded")]
    StepLimitExceeded { limit: u64 },
    #[error("input `{name}` of `{node}` has no value")]
    UnboundInput { node: ComponentId, name: String },
    #[error("component `{id}` ({component_type}) is not executable")]
    UnsupportedComponent {
        id: ComponentId,
        component_type: String,
    },
    #[error("node `{node}` failed: {cause}")]
    NodeExecutionFailed {
        node: ComponentId,
        cause: NodeFailure,
    },
    #[error("agent `{agent}` exceeded its turn budget of {max_turns}")]
    MaxTurnsExceeded { agent: ComponentId, max_turns: u32 },
    #[error("agent requested unknown tool `{name}`")]
    ToolNotFound { name: String },
    #[error("final outputs of agent `{agent}` do not conform: {reason}")]
    FinalOutputsSchemaMismatch { agent: ComponentId, reason: String },
    #[error("session is not suspended")]
    NotSuspended,
    #[error("client tool result call id `{got}` does not match pending call `{expected}`")]
    CallIdMismatch { expected: String, got: String },
    #[error("client tool result does not conform: {reason}")]
    ToolOutputSchemaMismatch { reason: String },
    #[error("resume payload does not match the suspension kind")]
    PayloadKindMismatch,
    #[error("input `{name}`: {reason}")]
    InputSchemaMismatch { name: String, reason: String },
    #[error("no control edge from branch `{branch}` of node `{node}`")]
    MissingControlEdge { node: ComponentId, branch: String },
    #[error("internal engine invariant violated: {message}")]
    Internal { message: String },
    #[error(transparent)]
    Document(#[from] DocumentError),
}

impl EngineError {
    /// Short stable identifier used by conformance expectations and reports.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::StepLimitExceeded { .. } => "StepLimitExceeded",
            EngineError::UnboundInput { .. } => "UnboundInput",
            EngineError::UnsupportedComponent { .. } => "UnsupportedComponent",
            EngineError::NodeExecutionFailed { .. } => "NodeExecutionFailed",
            EngineError::MaxTurnsExceeded { .. } => "MaxTurnsExceeded",
            EngineError::ToolNotFound { .. } => "ToolNotFound",
            EngineError::FinalOutputsSchemaMismatch { .. } => "FinalOutputsSchemaMismatch",
            EngineError::NotSuspended => "NotSuspended",
            EngineError::CallIdMismatch { .. } => "CallIdMismatch",
            EngineError::ToolOutputSchemaMismatch { .. } => "ToolOutputSchemaMismatch",
            EngineError::PayloadKindMismatch => "PayloadKindMismatch",
            EngineError::InputSchemaMismatch { .. } => "InputSchemaMismatch",
            EngineError::MissingControlEdge { .. } => "MissingControlEdge",
            EngineError::Internal { .. } => "Internal",
            EngineError::Document(_) => "Document",
        }
    }

    fn internal(message: impl Into<String>) -> EngineError {
        EngineError::Internal {
            message: message.into(),
        }
    }
}

fn node_failed(node: &ComponentId, cause: impl Into<NodeFailure>) -> EngineError {
    EngineError::NodeExecutionFailed {
        node: node.clone(),
        cause: cause.into(),
    }
}

impl From<String> for NodeFailure {
    fn from(message: String) -> NodeFailure {
        NodeFailure::Other(message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SessionState {
    Running,
    Suspended,
    Finished,
    Failed,
}

/// Per-flow binding store. Explicit mode keys by (node, output); name-based
/// mode is the shared variable space. Both remember the write step that the
/// recency rule compares.
enum BindingStore {
    Explicit(BTreeMap<(ComponentId, String), (Value, u64)>),
    Named(BTreeMap<String, (Value, u64)>),
}

enum FlowPending {
    /// A child frame (flow, agent, or map) is computing this node's outputs.
    Wrapper {
        node: ComponentId,
    },
    UserInput {
        node: ComponentId,
    },
    ClientTool {
        node: ComponentId,
        tool: ComponentId,
        call_id: String,
    },
}

struct FlowFrame {
    store: BindingStore,
    /// (destination node, input) -> connected (source node, output) pairs.
    incoming: BTreeMap<(ComponentId, String), Vec<(ComponentId, String)>>,
    /// (node, branch) -> successor.
    routes: BTreeMap<(ComponentId, String), ComponentId>,
    current: ComponentId,
    initial: BTreeMap<String, Value>,
    pending: Option<FlowPending>,
}

enum AgentAwaiting {
    UserInput,
    ClientTool { tool: ComponentId, call_id: String },
}

struct AgentFrame {
    agent_id: ComponentId,
    system_prompt: String,
    turns: u32,
    awaiting: Option<AgentAwaiting>,
}

struct MapFrame {
    node_id: ComponentId,
    flow_id: ComponentId,
    iterated_name: String,
    elements: Vec<Value>,
    broadcast: BTreeMap<String, Value>,
    index: usize,
    collected: Vec<BTreeMap<String, Value>>,
}

enum Frame {
    Flow(FlowFrame),
    Agent(AgentFrame),
    Map(MapFrame),
}

/// Session internals shared by every frame operation: the document, the
/// host environment, the conversation, the trace, and the step counter.
struct SessionCore {
    document: Arc<SpecDocument>,
    env: Environment,
    conversation: Vec<Message>,
    trace: Vec<TraceEvent>,
    step_counter: u64,
    step_limit: u64,
    next_call_id: u64,
}

impl SessionCore {
    fn emit(
        &mut self,
        step: u64,
        node_id: &ComponentId,
        kind: TraceEventKind,
        detail: Option<Value>,
    ) {
        self.trace.push(TraceEvent {
            step,
            node_id: node_id.to_string(),
            kind,
            detail,
        });
    }

    fn bump_step(&mut self) -> Result<u64, EngineError> {
        self.step_counter += 1;
        if self.step_counter > self.step_limit {
            return Err(EngineError::StepLimitExceeded {
                limit: self.step_limit,
            });
        }
        Ok(self.step_counter)
    }

    fn new_call_id(&mut self) -> String {
        self.next_call_id += 1;
        format!("call_{}", self.next_call_id)
    }

    /// Appends to the shared conversation and records the event.
    fn append_message(&mut self, owner: &ComponentId, message: Message) {
        let mut detail = Map::new();
        detail.insert("content".into(), Value::String(message.content.clone()));
        detail.insert("recipient".into(), Value::String(message.recipient.clone()));
        detail.insert("role".into(), Value::String(message.role.as_str().into()));
        detail.insert("sender".into(), Value::String(message.sender.clone()));
        self.emit(
            self.step_counter,
            owner,
            TraceEventKind::MessageAppended,
            Some(Value::Object(detail)),
        );
        self.conversation.push(message);
    }

    fn llm_config(&self, id: &ComponentId) -> Result<LlmConfig, EngineError> {
        let (_, config) = self
            .document
            .expect_kind(id, "an LLM config", Component::as_llm_config)?;
        Ok(config.clone())
    }
}

fn outputs_detail(outputs: &BTreeMap<String, Value>) -> Value {
    let mut object = Map::new();
    object.insert(
        "outputs".into(),
        Value::Object(outputs.iter().map(|(k, v)| (k.clone(), v.clone())).collect()),
    );
    Value::Object(object)
}

/// A suspendable interpreter over one document. Start it with
/// [`ExecutionSession::start`]; when the returned status is a suspension,
/// feed it a [`ResumePayload`] via [`ExecutionSession::resume`].
pub struct ExecutionSession {
    core: SessionCore,
    frames: Vec<Frame>,
    state: SessionState,
}

impl std::fmt::Debug for ExecutionSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExecutionSession")
            .field("state", &self.state)
            .field("frames", &self.frames.len())
            .field("steps", &self.core.step_counter)
            .field("messages", &self.core.conversation.len())
            .finish()
    }
}

enum NodeOutcome {
    Publish {
        outputs: BTreeMap<String, Value>,
        branch: Option<String>,
    },
    PushFrame {
        frame: Frame,
    },
    Suspend {
        pending: FlowPending,
        status: ExecutionStatus,
    },
}

impl ExecutionSession {
    /// Prepares a session on the entry component without executing anything:
    /// entry inputs are validated and the first frame is built. The document
    /// must have validated with no errors.
    pub fn new(
        document: Arc<SpecDocument>,
        entry: &ComponentId,
        inputs: BTreeMap<String, Value>,
        env: Environment,
        options: SessionOptions,
    ) -> Result<ExecutionSession, EngineError> {
        let mut session = ExecutionSession {
            core: SessionCore {
                document: Arc::clone(&document),
                env,
                conversation: Vec::new(),
                trace: Vec::new(),
                step_counter: 0,
                step_limit: options.step_limit,
                next_call_id: 0,
            },
            frames: Vec::new(),
            state: SessionState::Running,
        };

        let component = document.expect(entry)?.clone();
        match &component.kind {
            ComponentKind::Flow(_) => {
                let frame = session.make_flow_frame(entry, inputs)?;
                session.frames.push(Frame::Flow(frame));
            }
            ComponentKind::Agent(agent) => {
                let frame = session.make_agent_frame(entry, agent, inputs)?;
                session.frames.push(Frame::Agent(frame));
            }
            _ => {
                return Err(EngineError::UnsupportedComponent {
                    id: entry.clone(),
                    component_type: component.component_type().to_string(),
                })
            }
        }
        Ok(session)
    }

    /// Drives a fresh session to its first status. On error the session is
    /// failed but its trace and conversation remain readable.
    pub fn run(&mut self) -> Result<ExecutionStatus, EngineError> {
        if self.state != SessionState::Running || self.core.step_counter > 0 {
            return Err(EngineError::internal("run on a session that already ran"));
        }
        self.run_until_status()
    }

    /// Convenience for `new` followed by `run`.
    pub fn start(
        document: Arc<SpecDocument>,
        entry: &ComponentId,
        inputs: BTreeMap<String, Value>,
        env: Environment,
        options: SessionOptions,
    ) -> Result<(ExecutionSession, ExecutionStatus), EngineError> {
        let mut session = ExecutionSession::new(document, entry, inputs, env, options)?;
        let status = session.run()?;
        Ok((session, status))
    }

    /// Continues a suspended session with a user message or client-tool
    /// result. Mismatched payloads leave the session suspended.
    pub fn resume(&mut self, payload: ResumePayload) -> Result<ExecutionStatus, EngineError> {
        if self.state != SessionState::Suspended {
            return Err(EngineError::NotSuspended);
        }
        let document = Arc::clone(&self.core.document);
        let step = self.core.step_counter;

        enum Plan {
            FlowUser(ComponentId),
            FlowTool(ComponentId, Map<String, Value>),
            AgentUser(ComponentId),
            AgentTool(ComponentId, ComponentId, Map<String, Value>),
        }

        // Validate against the pending suspension without consuming it, so a
        // bad payload can be retried.
        let plan = match self.frames.last() {
            Some(Frame::Flow(frame)) => match (&frame.pending, &payload) {
                (Some(FlowPending::UserInput { node }), ResumePayload::UserMessage { .. }) => {
                    Plan::FlowUser(node.clone())
                }
                (
                    Some(FlowPending::ClientTool {
                        node,
                        tool,
                        call_id,
                    }),
                    ResumePayload::ClientToolResult {
                        call_id: got,
                        outputs,
                    },
                ) => {
                    if got != call_id {
                        return Err(EngineError::CallIdMismatch {
                            expected: call_id.clone(),
                            got: got.clone(),
                        });
                    }
                    let conformed = conform_client_outputs(&document, tool, outputs)?;
                    Plan::FlowTool(node.clone(), conformed)
                }
                (Some(_), _) => return Err(EngineError::PayloadKindMismatch),
                (None, _) => return Err(EngineError::internal("suspended flow without pending")),
            },
            Some(Frame::Agent(frame)) => match (&frame.awaiting, &payload) {
                (Some(AgentAwaiting::UserInput), ResumePayload::UserMessage { .. }) => {
                    Plan::AgentUser(frame.agent_id.clone())
                }
                (
                    Some(AgentAwaiting::ClientTool { tool, call_id }),
                    ResumePayload::ClientToolResult {
                        call_id: got,
                        outputs,
                    },
                ) => {
                    if got != call_id {
                        return Err(EngineError::CallIdMismatch {
                            expected: call_id.clone(),
                            got: got.clone(),
                        });
                    }
                    let conformed = conform_client_outputs(&document, tool, outputs)?;
                    Plan::AgentTool(frame.agent_id.clone(), tool.clone(), conformed)
                }
                (Some(_), _) => return Err(EngineError::PayloadKindMismatch),
                (None, _) => {
                    return Err(EngineError::internal("suspended agent without awaiting"))
                }
            },
            _ => return Err(EngineError::internal("suspended session without frames")),
        };

        self.state = SessionState::Running;
        match plan {
            Plan::FlowUser(node_id) => {
                let ResumePayload::UserMessage { text } = payload else {
                    unreachable!()
                };
                self.core.emit(
                    step,
                    &node_id,
                    TraceEventKind::Resumed,
                    Some(serde_json::json!({"payload": "user_message"})),
                );
                self.core.append_message(
                    &node_id,
                    Message::new(Role::User, text.clone(), "user", node_id.to_string()),
                );
                let node = expect_node(&document, &node_id)?;
                let outputs: BTreeMap<String, Value> = node
                    .outputs
                    .iter()
                    .map(|p| (p.name().to_string(), Value::String(text.clone())))
                    .collect();
                self.clear_flow_pending()?;
                self.publish_and_continue(&node_id, outputs, step)?;
            }
            Plan::FlowTool(node_id, conformed) => {
                self.core.emit(
                    step,
                    &node_id,
                    TraceEventKind::Resumed,
                    Some(serde_json::json!({"payload": "client_tool_result"})),
                );
                let node = expect_node(&document, &node_id)?;
                let outputs = project_outputs(&node.outputs, &conformed);
                self.clear_flow_pending()?;
                self.publish_and_continue(&node_id, outputs, step)?;
            }
            Plan::AgentUser(agent_id) => {
                let ResumePayload::UserMessage { text } = payload else {
                    unreachable!()
                };
                self.core.emit(
                    step,
                    &agent_id,
                    TraceEventKind::Resumed,
                    Some(serde_json::json!({"payload": "user_message"})),
                );
                self.core.append_message(
                    &agent_id,
                    Message::new(Role::User, text, "user", agent_id.to_string()),
                );
                self.clear_agent_awaiting()?;
            }
            Plan::AgentTool(agent_id, tool_id, conformed) => {
                self.core.emit(
                    step,
                    &agent_id,
                    TraceEventKind::Resumed,
                    Some(serde_json::json!({"payload": "client_tool_result"})),
                );
                let tool_name = document.expect(&tool_id)?.name().to_string();
                self.core.append_message(
                    &agent_id,
                    Message::new(
                        Role::Tool,
                        Value::Object(conformed).to_string(),
                        tool_name,
                        agent_id.to_string(),
                    ),
                );
                self.clear_agent_awaiting()?;
            }
        }
        self.run_until_status()
    }

    pub fn is_suspended(&self) -> bool {
        self.state == SessionState::Suspended
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.core.trace
    }

    /// Line-delimited JSON trace export.
    pub fn trace_text(&self) -> String {
        trace_to_text(&self.core.trace)
    }

    pub fn conversation(&self) -> &[Message] {
        &self.core.conversation
    }

    pub fn steps(&self) -> u64 {
        self.core.step_counter
    }

    fn run_until_status(&mut self) -> Result<ExecutionStatus, EngineError> {
        loop {
            match self.advance() {
                Ok(Some(status)) => return Ok(status),
                Ok(None) => {}
                Err(e) => {
                    self.state = SessionState::Failed;
                    return Err(e);
                }
            }
        }
    }

    fn advance(&mut self) -> Result<Option<ExecutionStatus>, EngineError> {
        match self.frames.last() {
            Some(Frame::Flow(_)) => self.step_flow(),
            Some(Frame::Agent(_)) => self.step_agent(),
            Some(Frame::Map(_)) => self.step_map(),
            None => Err(EngineError::internal("advance on a finished session")),
        }
    }

    // ------------------------------------------------------------------
    // flow frames
    // ------------------------------------------------------------------

    fn make_flow_frame(
        &mut self,
        flow_id: &ComponentId,
        provided: BTreeMap<String, Value>,
    ) -> Result<FlowFrame, EngineError> {
        let document = Arc::clone(&self.core.document);
        let (_, flow) = document.expect_kind(flow_id, "a flow", Component::as_flow)?;
        let initial = conform_inputs(flow_id, &flow.inputs, provided)?;

        let mut routes = BTreeMap::new();
        for edge_id in &flow.control_flow_connections {
            let (_, edge) = document.expect_kind(
                edge_id,
                "a control flow edge",
                Component::as_control_flow_edge,
            )?;
            routes.insert(
                (edge.from_node.clone(), edge.effective_branch().to_string()),
                edge.to_node.clone(),
            );
        }

        let (store, incoming) = match &flow.data_flow_connections {
            None => (BindingStore::Named(BTreeMap::new()), BTreeMap::new()),
            Some(edge_ids) => {
                let mut incoming: BTreeMap<(ComponentId, String), Vec<(ComponentId, String)>> =
                    BTreeMap::new();
                for edge_id in edge_ids {
                    let (_, edge): (_, &DataFlowEdge) = document.expect_kind(
                        edge_id,
                        "a data flow edge",
                        Component::as_data_flow_edge,
                    )?;
                    incoming
                        .entry((edge.destination_node.clone(), edge.destination_input.clone()))
                        .or_default()
                        .push((edge.source_node.clone(), edge.source_output.clone()));
                }
                (BindingStore::Explicit(BTreeMap::new()), incoming)
            }
        };

        Ok(FlowFrame {
            store,
            incoming,
            routes,
            current: flow.start_node.clone(),
            initial,
            pending: None,
        })
    }

    fn current_flow_frame(&mut self) -> Result<&mut FlowFrame, EngineError> {
        match self.frames.last_mut() {
            Some(Frame::Flow(frame)) => Ok(frame),
            _ => Err(EngineError::internal("expected a flow frame on top")),
        }
    }

    fn clear_flow_pending(&mut self) -> Result<(), EngineError> {
        self.current_flow_frame()?.pending = None;
        Ok(())
    }

    fn clear_agent_awaiting(&mut self) -> Result<(), EngineError> {
        match self.frames.last_mut() {
            Some(Frame::Agent(frame)) => {
                frame.awaiting = None;
                Ok(())
            }
            _ => Err(EngineError::internal("expected an agent frame on top")),
        }
    }

    fn step_flow(&mut self) -> Result<Option<ExecutionStatus>, EngineError> {
        let document = Arc::clone(&self.core.document);
        let node_id = {
            let frame = self.current_flow_frame()?;
            if frame.pending.is_some() {
                return Err(EngineError::internal("flow frame stepped while pending"));
            }
            frame.current.clone()
        };
        let step = self.core.bump_step()?;
        self.core
            .emit(step, &node_id, TraceEventKind::NodeEntered, None);

        let node = expect_node(&document, &node_id)?;
        let bindings = {
            let frame = self.current_flow_frame()?;
            match node.kind {
                NodeKind::Start => frame.initial.clone(),
                _ => resolve_inputs(frame, &node_id, &node)?,
            }
        };

        if matches!(node.kind, NodeKind::End) {
            // the reached end node's collected values are the flow outputs
            // and must conform to its declared schemas (name-based mode has
            // no static edge checks to guarantee this)
            for prop in &node.outputs {
                if let Some(value) = bindings.get(prop.name()) {
                    if !value_conforms(value, prop.type_kind()) {
                        return Err(node_failed(
                            &node_id,
                            NodeFailure::Other(format!(
                                "collected output `{}` must be {}",
                                prop.name(),
                                prop.type_kind()
                            )),
                        ));
                    }
                }
            }
            self.core.emit(
                step,
                &node_id,
                TraceEventKind::OutputsPublished,
                Some(outputs_detail(&bindings)),
            );
            self.frames.pop();
            return self.finish_frame(bindings);
        }

        let outcome = self.execute_flow_node(&node_id, &node, bindings, step)?;
        match outcome {
            NodeOutcome::Publish { outputs, branch } => {
                self.publish_and_continue_with(
                    &node_id,
                    outputs,
                    step,
                    branch.as_deref().unwrap_or(DEFAULT_BRANCH),
                )?;
                Ok(None)
            }
            NodeOutcome::PushFrame { frame } => {
                self.current_flow_frame()?.pending = Some(FlowPending::Wrapper {
                    node: node_id.clone(),
                });
                self.frames.push(frame);
                Ok(None)
            }
            NodeOutcome::Suspend { pending, status } => {
                self.current_flow_frame()?.pending = Some(pending);
                self.state = SessionState::Suspended;
                Ok(Some(status))
            }
        }
    }

    fn publish_and_continue(
        &mut self,
        node_id: &ComponentId,
        outputs: BTreeMap<String, Value>,
        step: u64,
    ) -> Result<(), EngineError> {
        self.publish_and_continue_with(node_id, outputs, step, DEFAULT_BRANCH)
    }

    fn publish_and_continue_with(
        &mut self,
        node_id: &ComponentId,
        outputs: BTreeMap<String, Value>,
        step: u64,
        branch: &str,
    ) -> Result<(), EngineError> {
        {
            let frame = self.current_flow_frame()?;
            publish(frame, node_id, &outputs, step);
        }
        self.core.emit(
            step,
            node_id,
            TraceEventKind::OutputsPublished,
            Some(outputs_detail(&outputs)),
        );
        self.core.emit(
            step,
            node_id,
            TraceEventKind::BranchTaken,
            Some(serde_json::json!({"branch": branch})),
        );
        let next = {
            let frame = self.current_flow_frame()?;
            frame
                .routes
                .get(&(node_id.clone(), branch.to_string()))
                .cloned()
        };
        match next {
            Some(next) => {
                self.current_flow_frame()?.current = next;
                Ok(())
            }
            None => Err(EngineError::MissingControlEdge {
                node: node_id.clone(),
                branch: branch.to_string(),
            }),
        }
    }

    /// The completed child's frame is already popped; hands its outputs to
    /// whatever is waiting for them, or finishes the session.
    fn finish_frame(
        &mut self,
        result: BTreeMap<String, Value>,
    ) -> Result<Option<ExecutionStatus>, EngineError> {
        if self.frames.is_empty() {
            self.state = SessionState::Finished;
            return Ok(Some(ExecutionStatus::Finished { outputs: result }));
        }
        let pending_node = match self.frames.last_mut() {
            Some(Frame::Map(map)) => {
                map.collected.push(result);
                map.index += 1;
                return Ok(None);
            }
            Some(Frame::Flow(frame)) => match frame.pending.take() {
                Some(FlowPending::Wrapper { node }) => node,
                _ => {
                    return Err(EngineError::internal(
                        "child finished but parent flow was not waiting",
                    ))
                }
            },
            _ => {
                return Err(EngineError::internal(
                    "child finished under a non-container frame",
                ))
            }
        };
        let document = Arc::clone(&self.core.document);
        let node = expect_node(&document, &pending_node)?;
        // expose only what the wrapper declares; a specific run may not
        // produce every union output
        let outputs = project_outputs(&node.outputs, &result.into_iter().collect());
        let step = self.core.step_counter;
        self.publish_and_continue(&pending_node, outputs, step)?;
        Ok(None)
    }

    fn execute_flow_node(
        &mut self,
        node_id: &ComponentId,
        node: &Node,
        bindings: BTreeMap<String, Value>,
        step: u64,
    ) -> Result<NodeOutcome, EngineError> {
        let document = Arc::clone(&self.core.document);
        match &node.kind {
            NodeKind::Start => Ok(NodeOutcome::Publish {
                outputs: bindings,
                branch: None,
            }),
            NodeKind::End => Err(EngineError::internal("end nodes are handled by step_flow")),
            NodeKind::Llm {
                llm_config,
                prompt_template,
            } => {
                let prompt =
                    render(prompt_template, &bindings).map_err(|e| node_failed(node_id, e))?;
                let config = self.core.llm_config(llm_config)?;
                let messages = vec![Message::new(
                    Role::User,
                    prompt,
                    node_id.to_string(),
                    llm_config.to_string(),
                )];
                let response = self
                    .core
                    .env
                    .llm
                    .generate(&config, &messages, &[])
                    .map_err(|e| node_failed(node_id, e))?;
                let LlmResponse::Text { content } = response else {
                    return Err(node_failed(
                        node_id,
                        NodeFailure::Other("expected a text response".to_string()),
                    ));
                };
                let output = node.outputs.first().ok_or_else(|| {
                    node_failed(
                        node_id,
                        NodeFailure::Other("an LLM node needs one declared output".to_string()),
                    )
                })?;
                let mut outputs = BTreeMap::new();
                outputs.insert(output.name().to_string(), Value::String(content));
                Ok(NodeOutcome::Publish {
                    outputs,
                    branch: None,
                })
            }
            NodeKind::Api {
                url_template,
                http_method,
                headers,
                body_template,
            } => {
                let url = render(url_template, &bindings).map_err(|e| node_failed(node_id, e))?;
                let body = body_template
                    .as_deref()
                    .map(|t| render(t, &bindings))
                    .transpose()
                    .map_err(|e| node_failed(node_id, e))?;
                let (status, text) = crate::backend::http_text_request(
                    &self.core.env.http,
                    *http_method,
                    &url,
                    headers,
                    body.as_deref(),
                )
                .map_err(|e| node_failed(node_id, e))?;
                let mut outputs = BTreeMap::new();
                for prop in &node.outputs {
                    match prop.name() {
                        "status" => {
                            outputs.insert("status".to_string(), Value::Number(status.into()));
                        }
                        "body" => {
                            outputs.insert("body".to_string(), Value::String(text.clone()));
                        }
                        _ => {}
                    }
                }
                Ok(NodeOutcome::Publish {
                    outputs,
                    branch: None,
                })
            }
            NodeKind::Branching {
                branch_input,
                mapping,
            } => {
                let value =
                    bindings
                        .get(branch_input)
                        .ok_or_else(|| EngineError::UnboundInput {
                            node: node_id.clone(),
                            name: branch_input.clone(),
                        })?;
                let key = value_to_text(value);
                let branch = mapping
                    .get(&key)
                    .cloned()
                    .unwrap_or_else(|| BRANCH_FALLBACK.to_string());
                Ok(NodeOutcome::Publish {
                    outputs: BTreeMap::new(),
                    branch: Some(branch),
                })
            }
            NodeKind::Tool { tool } => self.execute_tool_node(node_id, node, tool, bindings, step),
            NodeKind::Agent { agent } => {
                let agent_def = {
                    let (_, agent_def) =
                        document.expect_kind(agent, "an agent", Component::as_agent)?;
                    agent_def.clone()
                };
                let frame = self.make_agent_frame(agent, &agent_def, bindings)?;
                Ok(NodeOutcome::PushFrame {
                    frame: Frame::Agent(frame),
                })
            }
            NodeKind::Flow { flow } => {
                let frame = self.make_flow_frame(flow, bindings)?;
                Ok(NodeOutcome::PushFrame {
                    frame: Frame::Flow(frame),
                })
            }
            NodeKind::Map {
                flow,
                iterated_input,
            } => {
                let mut broadcast = bindings;
                let elements = match broadcast.remove(iterated_input) {
                    Some(Value::Array(elements)) => elements,
                    Some(_) => {
                        return Err(node_failed(
                            node_id,
                            NodeFailure::Other(format!(
                                "iterated input `{iterated_input}` must be an array"
                            )),
                        ))
                    }
                    None => {
                        return Err(EngineError::UnboundInput {
                            node: node_id.clone(),
                            name: iterated_input.clone(),
                        })
                    }
                };
                Ok(NodeOutcome::PushFrame {
                    frame: Frame::Map(MapFrame {
                        node_id: node_id.clone(),
                        flow_id: flow.clone(),
                        iterated_name: iterated_input.clone(),
                        elements,
                        broadcast,
                        index: 0,
                        collected: Vec::new(),
                    }),
                })
            }
            NodeKind::InputMessage { message_template } => {
                let prompt = message_template
                    .as_deref()
                    .map(|t| render(t, &bindings))
                    .transpose()
                    .map_err(|e| node_failed(node_id, e))?;
                if let Some(text) = &prompt {
                    self.core.append_message(
                        node_id,
                        Message::new(Role::Agent, text.clone(), node_id.to_string(), "user"),
                    );
                }
                self.core.emit(
                    step,
                    node_id,
                    TraceEventKind::Suspended,
                    Some(serde_json::json!({"awaiting": "user_input"})),
                );
                Ok(NodeOutcome::Suspend {
                    pending: FlowPending::UserInput {
                        node: node_id.clone(),
                    },
                    status: ExecutionStatus::AwaitingUserInput { prompt },
                })
            }
            NodeKind::OutputMessage { message_template } => {
                let text =
                    render(message_template, &bindings).map_err(|e| node_failed(node_id, e))?;
                self.core.append_message(
                    node_id,
                    Message::new(Role::Agent, text.clone(), node_id.to_string(), "user"),
                );
                let outputs: BTreeMap<String, Value> = node
                    .outputs
                    .iter()
                    .map(|p| (p.name().to_string(), Value::String(text.clone())))
                    .collect();
                Ok(NodeOutcome::Publish {
                    outputs,
                    branch: None,
                })
            }
        }
    }

    fn execute_tool_node(
        &mut self,
        node_id: &ComponentId,
        node: &Node,
        tool_id: &ComponentId,
        bindings: BTreeMap<String, Value>,
        step: u64,
    ) -> Result<NodeOutcome, EngineError> {
        let document = Arc::clone(&self.core.document);
        let (tool_component, tool) = document.expect_kind(tool_id, "a tool", Component::as_tool)?;
        let tool_name = tool_component.name().to_string();
        let args: Map<String, Value> = bindings.into_iter().collect();
        match &tool.kind {
            ToolKind::Server => {
                let result = invoke_server_tool(&self.core.env.tools, &tool_name, tool, &args)
                    .map_err(|e| node_failed(node_id, e))?;
                self.core.emit(
                    step,
                    node_id,
                    TraceEventKind::ToolInvoked,
                    Some(serde_json::json!({"args": args, "kind": "server", "tool": tool_name})),
                );
                Ok(NodeOutcome::Publish {
                    outputs: project_outputs(&node.outputs, &result),
                    branch: None,
                })
            }
            ToolKind::Remote { .. } => {
                let result = invoke_remote_tool(&self.core.env.http, &tool_name, tool, &args)
                    .map_err(|e| node_failed(node_id, e))?;
                self.core.emit(
                    step,
                    node_id,
                    TraceEventKind::ToolInvoked,
                    Some(serde_json::json!({"args": args, "kind": "remote", "tool": tool_name})),
                );
                Ok(NodeOutcome::Publish {
                    outputs: project_outputs(&node.outputs, &result),
                    branch: None,
                })
            }
            ToolKind::Client => {
                let call_id = self.core.new_call_id();
                self.core.emit(
                    step,
                    node_id,
                    TraceEventKind::ToolInvoked,
                    Some(serde_json::json!({
                        "args": args, "call_id": call_id, "kind": "client", "tool": tool_name
                    })),
                );
                self.core.emit(
                    step,
                    node_id,
                    TraceEventKind::Suspended,
                    Some(serde_json::json!({"awaiting": "client_tool", "call_id": call_id})),
                );
                Ok(NodeOutcome::Suspend {
                    pending: FlowPending::ClientTool {
                        node: node_id.clone(),
                        tool: tool_id.clone(),
                        call_id: call_id.clone(),
                    },
                    status: ExecutionStatus::AwaitingClientTool {
                        call_id,
                        tool_name,
                        args,
                    },
                })
            }
            ToolKind::Mcp { .. } => Err(EngineError::UnsupportedComponent {
                id: tool_id.clone(),
                component_type: "MCPTool".to_string(),
            }),
        }
    }

    // ------------------------------------------------------------------
    // map frames
    // ------------------------------------------------------------------

    fn step_map(&mut self) -> Result<Option<ExecutionStatus>, EngineError> {
        let (node_id, flow_id, next_initial) = {
            let Some(Frame::Map(map)) = self.frames.last() else {
                return Err(EngineError::internal("expected a map frame on top"));
            };
            if map.index < map.elements.len() {
                let mut initial = map.broadcast.clone();
                initial.insert(map.iterated_name.clone(), map.elements[map.index].clone());
                (map.node_id.clone(), map.flow_id.clone(), Some(initial))
            } else {
                (map.node_id.clone(), map.flow_id.clone(), None)
            }
        };

        if let Some(initial) = next_initial {
            let frame = self.make_flow_frame(&flow_id, initial)?;
            self.frames.push(Frame::Flow(frame));
            return Ok(None);
        }

        // all elements ran: lift collected outputs element-wise to arrays
        let document = Arc::clone(&self.core.document);
        let node = expect_node(&document, &node_id)?;
        let Some(Frame::Map(map)) = self.frames.pop() else {
            return Err(EngineError::internal("map frame vanished"));
        };
        let mut result = BTreeMap::new();
        for prop in &node.outputs {
            let mut lifted = Vec::with_capacity(map.collected.len());
            for (index, run) in map.collected.iter().enumerate() {
                match run.get(prop.name()) {
                    Some(value) => lifted.push(value.clone()),
                    None => {
                        return Err(node_failed(
                            &node_id,
                            NodeFailure::Other(format!(
                                "element {index} produced no output `{}`",
                                prop.name()
                            )),
                        ))
                    }
                }
            }
            result.insert(prop.name().to_string(), Value::Array(lifted));
        }
        self.finish_frame(result)
    }

    // ------------------------------------------------------------------
    // agent frames
    // ------------------------------------------------------------------

    fn make_agent_frame(
        &mut self,
        agent_id: &ComponentId,
        agent: &Agent,
        provided: BTreeMap<String, Value>,
    ) -> Result<AgentFrame, EngineError> {
        let bindings = conform_inputs(agent_id, &agent.inputs, provided)?;
        let system_prompt =
            render(&agent.instructions, &bindings).map_err(|e| node_failed(agent_id, e))?;
        Ok(AgentFrame {
            agent_id: agent_id.clone(),
            system_prompt,
            turns: 0,
            awaiting: None,
        })
    }

    fn step_agent(&mut self) -> Result<Option<ExecutionStatus>, EngineError> {
        let document = Arc::clone(&self.core.document);
        let (agent_id, system_prompt, turns) = {
            let Some(Frame::Agent(frame)) = self.frames.last() else {
                return Err(EngineError::internal("expected an agent frame on top"));
            };
            if frame.awaiting.is_some() {
                return Err(EngineError::internal("agent frame stepped while awaiting"));
            }
            (
                frame.agent_id.clone(),
                frame.system_prompt.clone(),
                frame.turns,
            )
        };
        let agent = {
            let (_, agent) = document.expect_kind(&agent_id, "an agent", Component::as_agent)?;
            agent.clone()
        };

        if turns >= agent.max_turns {
            return Err(EngineError::MaxTurnsExceeded {
                agent: agent_id.clone(),
                max_turns: agent.max_turns,
            });
        }

        let config_id = agent.llm_config.clone().ok_or_else(|| {
            node_failed(
                &agent_id,
                NodeFailure::Other("agent has no LLM config".to_string()),
            )
        })?;
        let config = self.core.llm_config(&config_id)?;

        let mut messages = Vec::with_capacity(self.core.conversation.len() + 1);
        messages.push(Message::new(
            Role::System,
            system_prompt,
            agent_id.to_string(),
            config_id.to_string(),
        ));
        messages.extend(self.core.conversation.iter().cloned());

        let mut specs: Vec<ToolSpec> = Vec::with_capacity(agent.tools.len());
        for tool_id in &agent.tools {
            let (tool_component, tool) =
                document.expect_kind(tool_id, "a tool", Component::as_tool)?;
            specs.push(tool_spec(
                tool_component.name(),
                tool_component.header.description.as_deref(),
                tool,
            ));
        }

        let response = self
            .core
            .env
            .llm
            .generate(&config, &messages, &specs)
            .map_err(|e| node_failed(&agent_id, e))?;
        if let Some(Frame::Agent(frame)) = self.frames.last_mut() {
            frame.turns += 1;
        }

        match response {
            LlmResponse::Text { content } => {
                self.core.append_message(
                    &agent_id,
                    Message::new(Role::Agent, content.clone(), agent_id.to_string(), "user"),
                );
                self.core.emit(
                    self.core.step_counter,
                    &agent_id,
                    TraceEventKind::Suspended,
                    Some(serde_json::json!({"awaiting": "user_input"})),
                );
                if let Some(Frame::Agent(frame)) = self.frames.last_mut() {
                    frame.awaiting = Some(AgentAwaiting::UserInput);
                }
                self.state = SessionState::Suspended;
                Ok(Some(ExecutionStatus::AwaitingUserInput {
                    prompt: Some(content),
                }))
            }
            LlmResponse::ToolCall {
                tool_name,
                arguments,
                ..
            } => self.agent_tool_call(&agent_id, &agent, &tool_name, arguments),
            LlmResponse::FinalOutputs { values } => {
                let outputs = conform_final_outputs(&agent_id, &agent.outputs, &values)?;
                self.core.emit(
                    self.core.step_counter,
                    &agent_id,
                    TraceEventKind::OutputsPublished,
                    Some(outputs_detail(&outputs)),
                );
                self.frames.pop();
                self.finish_frame(outputs)
            }
        }
    }

    fn agent_tool_call(
        &mut self,
        agent_id: &ComponentId,
        agent: &Agent,
        tool_name: &str,
        arguments: Map<String, Value>,
    ) -> Result<Option<ExecutionStatus>, EngineError> {
        let document = Arc::clone(&self.core.document);
        let mut found = None;
        for tool_id in &agent.tools {
            let (tool_component, tool) =
                document.expect_kind(tool_id, "a tool", Component::as_tool)?;
            if tool_component.name() == tool_name {
                found = Some((tool_id.clone(), tool.clone()));
                break;
            }
        }
        let Some((tool_id, tool)) = found else {
            return Err(EngineError::ToolNotFound {
                name: tool_name.to_string(),
            });
        };

        let mut call_detail = Map::new();
        call_detail.insert("args".into(), Value::Object(arguments.clone()));
        call_detail.insert("tool".into(), Value::String(tool_name.to_string()));
        self.core.append_message(
            agent_id,
            Message::new(
                Role::Agent,
                Value::Object(call_detail).to_string(),
                agent_id.to_string(),
                tool_name.to_string(),
            ),
        );

        let step = self.core.step_counter;
        match &tool.kind {
            ToolKind::Server => {
                let result = invoke_server_tool(&self.core.env.tools, tool_name, &tool, &arguments)
                    .map_err(|e| node_failed(agent_id, e))?;
                self.core.emit(
                    step,
                    agent_id,
                    TraceEventKind::ToolInvoked,
                    Some(
                        serde_json::json!({"args": arguments, "kind": "server", "tool": tool_name}),
                    ),
                );
                self.core.append_message(
                    agent_id,
                    Message::new(
                        Role::Tool,
                        Value::Object(result).to_string(),
                        tool_name.to_string(),
                        agent_id.to_string(),
                    ),
                );
                Ok(None)
            }
            ToolKind::Remote { .. } => {
                let result = invoke_remote_tool(&self.core.env.http, tool_name, &tool, &arguments)
                    .map_err(|e| node_failed(agent_id, e))?;
                self.core.emit(
                    step,
                    agent_id,
                    TraceEventKind::ToolInvoked,
                    Some(
                        serde_json::json!({"args": arguments, "kind": "remote", "tool": tool_name}),
                    ),
                );
                self.core.append_message(
                    agent_id,
                    Message::new(
                        Role::Tool,
                        Value::Object(result).to_string(),
                        tool_name.to_string(),
                        agent_id.to_string(),
                    ),
                );
                Ok(None)
            }
            ToolKind::Client => {
                let call_id = self.core.new_call_id();
                self.core.emit(
                    step,
                    agent_id,
                    TraceEventKind::ToolInvoked,
                    Some(serde_json::json!({
                        "args": arguments, "call_id": call_id, "kind": "client", "tool": tool_name
                    })),
                );
                self.core.emit(
                    step,
                    agent_id,
                    TraceEventKind::Suspended,
                    Some(serde_json::json!({"awaiting": "client_tool", "call_id": call_id})),
                );
                if let Some(Frame::Agent(frame)) = self.frames.last_mut() {
                    frame.awaiting = Some(AgentAwaiting::ClientTool {
                        tool: tool_id,
                        call_id: call_id.clone(),
                    });
                }
                self.state = SessionState::Suspended;
                Ok(Some(ExecutionStatus::AwaitingClientTool {
                    call_id,
                    tool_name: tool_name.to_string(),
                    args: arguments,
                }))
            }
            ToolKind::Mcp { .. } => Err(EngineError::UnsupportedComponent {
                id: tool_id,
                component_type: "MCPTool".to_string(),
            }),
        }
    }
}

// ----------------------------------------------------------------------
// binding helpers
// ----------------------------------------------------------------------

fn expect_node(document: &SpecDocument, id: &ComponentId) -> Result<Node, EngineError> {
    let (_, node) = document.expect_kind(id, "a node", Component::as_node)?;
    Ok(node.clone())
}

fn publish(
    frame: &mut FlowFrame,
    node_id: &ComponentId,
    outputs: &BTreeMap<String, Value>,
    step: u64,
) {
    match &mut frame.store {
        BindingStore::Explicit(store) => {
            for (name, value) in outputs {
                store.insert((node_id.clone(), name.clone()), (value.clone(), step));
            }
        }
        BindingStore::Named(store) => {
            for (name, value) in outputs {
                store.insert(name.clone(), (value.clone(), step));
            }
        }
    }
}

/// Resolves a node's inputs. Explicit mode picks, per input, the connected
/// source value with the greatest write step; name-based mode reads the
/// same-named variable. Both fall back to the property default.
fn resolve_inputs(
    frame: &FlowFrame,
    node_id: &ComponentId,
    node: &Node,
) -> Result<BTreeMap<String, Value>, EngineError> {
    let mut bindings = BTreeMap::new();
    for prop in node.sink_properties() {
        let resolved: Option<Value> = match &frame.store {
            BindingStore::Explicit(store) => frame
                .incoming
                .get(&(node_id.clone(), prop.name().to_string()))
                .into_iter()
                .flatten()
                .filter_map(|source| store.get(&(source.0.clone(), source.1.clone())))
                .max_by_key(|(_, step)| *step)
                .map(|(value, _)| value.clone()),
            BindingStore::Named(store) => store.get(prop.name()).map(|(value, _)| value.clone()),
        };
        let value = resolved.or_else(|| prop.default_value().cloned());
        match value {
            Some(value) => {
                bindings.insert(prop.name().to_string(), value);
            }
            None => {
                return Err(EngineError::UnboundInput {
                    node: node_id.clone(),
                    name: prop.name().to_string(),
                })
            }
        }
    }
    Ok(bindings)
}

/// Validates provided values against declared inputs: extras rejected, types
/// checked, defaults filled. Callers' values win over declared defaults.
fn conform_inputs(
    owner: &ComponentId,
    declared: &[Property],
    provided: BTreeMap<String, Value>,
) -> Result<BTreeMap<String, Value>, EngineError> {
    for name in provided.keys() {
        if !declared.iter().any(|p| p.name() == name) {
            return Err(EngineError::InputSchemaMismatch {
                name: name.clone(),
                reason: format!("`{owner}` declares no such input"),
            });
        }
    }
    let mut bound = BTreeMap::new();
    for prop in declared {
        match provided.get(prop.name()) {
            Some(value) => {
                if !value_conforms(value, prop.type_kind()) {
                    return Err(EngineError::InputSchemaMismatch {
                        name: prop.name().to_string(),
                        reason: format!("value must be {}", prop.type_kind()),
                    });
                }
                bound.insert(prop.name().to_string(), value.clone());
            }
            None => match prop.default_value() {
                Some(default) => {
                    bound.insert(prop.name().to_string(), default.clone());
                }
                None => {
                    return Err(EngineError::UnboundInput {
                        node: owner.clone(),
                        name: prop.name().to_string(),
                    })
                }
            },
        }
    }
    Ok(bound)
}

/// Binds a result dictionary onto declared output properties, dropping keys
/// the declaration does not expose.
fn project_outputs(declared: &[Property], result: &Map<String, Value>) -> BTreeMap<String, Value> {
    declared
        .iter()
        .filter_map(|p| result.get(p.name()).map(|v| (p.name().to_string(), v.clone())))
        .collect()
}

fn conform_client_outputs(
    document: &SpecDocument,
    tool_id: &ComponentId,
    outputs: &Map<String, Value>,
) -> Result<Map<String, Value>, EngineError> {
    let (tool_component, tool): (_, &Tool) =
        document.expect_kind(tool_id, "a tool", Component::as_tool)?;
    crate::backend::conform_tool_outputs(tool_component.name(), &tool.outputs, outputs).map_err(
        |e| EngineError::ToolOutputSchemaMismatch {
            reason: e.to_string(),
        },
    )
}

/// Final outputs must cover every declared agent output with a conforming
/// value; extra keys from chatty models are dropped.
fn conform_final_outputs(
    agent_id: &ComponentId,
    declared: &[Property],
    values: &Map<String, Value>,
) -> Result<BTreeMap<String, Value>, EngineError> {
    let mut outputs = BTreeMap::new();
    for prop in declared {
        match values.get(prop.name()) {
            Some(value) if value_conforms(value, prop.type_kind()) => {
                outputs.insert(prop.name().to_string(), value.clone());
            }
            Some(_) => {
                return Err(EngineError::FinalOutputsSchemaMismatch {
                    agent: agent_id.clone(),
                    reason: format!("output `{}` must be {}", prop.name(), prop.type_kind()),
                })
            }
            None => {
                return Err(EngineError::FinalOutputsSchemaMismatch {
                    agent: agent_id.clone(),
                    reason: format!("missing output `{}`", prop.name()),
                })
            }
        }
    }
    Ok(outputs)
}

// ----------------------------------------------------------------------
// name-based compilation
// ----------------------------------------------------------------------

/// Rewrites a name-based flow into explicit data-flow edges by connecting
/// every output to every same-named input of every other node (recency at
/// runtime reproduces the overwrite order). Only schema-compatible pairs are
/// connected so the result validates clean. Flows already in explicit mode
/// are returned unchanged.
pub fn compile_name_based(
    document: &SpecDocument,
    flow_id: &ComponentId,
) -> Result<SpecDocument, DocumentError> {
    let (flow_component, flow) = document.expect_kind(flow_id, "a flow", Component::as_flow)?;
    if !flow.is_name_based() {
        return Ok(document.clone());
    }

    let mut builder = document.to_builder();
    let mut edges = Vec::new();
    let mut counter = 0usize;
    for destination_id in &flow.nodes {
        let Some(destination) = document.component(destination_id).and_then(|c| c.as_node())
        else {
            continue;
        };
        for input in destination.sink_properties() {
            for source_id in &flow.nodes {
                if source_id == destination_id {
                    continue;
                }
                let Some(source) = document.component(source_id).and_then(|c| c.as_node()) else {
                    continue;
                };
                for output in source.source_properties() {
                    if output.name() != input.name()
                        || !crate::property::schema_compatible(output, input)
                    {
                        continue;
                    }
                    let mut edge_id = format!("{flow_id}__nb_edge_{counter}");
                    while builder.contains(&ComponentId::new(edge_id.clone())) {
                        counter += 1;
                        edge_id = format!("{flow_id}__nb_edge_{counter}");
                    }
                    counter += 1;
                    let name = format!(
                        "{source_id}_{}_to_{destination_id}_{}",
                        output.name(),
                        input.name()
                    );
                    let id = builder.insert(Component::new(
                        edge_id,
                        name,
                        ComponentKind::DataFlowEdge(DataFlowEdge {
                            source_node: source_id.clone(),
                            source_output: output.name().to_string(),
                            destination_node: destination_id.clone(),
                            destination_input: input.name().to_string(),
                        }),
                    ))?;
                    edges.push(id);
                }
            }
        }
    }

    let compiled = Flow {
        data_flow_connections: Some(edges),
        ..flow.clone()
    };
    builder.replace(Component {
        header: flow_component.header.clone(),
        kind: ComponentKind::Flow(compiled),
    });
    builder.finish(document.root_id().clone())
}
