//! Execution trace: one event per observable engine action.
//!
//! Exported as line-delimited JSON, one event per line, with sorted keys.
//! With a scripted backend the trace is byte-deterministic, which is what
//! conformance goldens compare against.

use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEventKind {
    NodeEntered,
    OutputsPublished,
    BranchTaken,
    MessageAppended,
    ToolInvoked,
    Suspended,
    Resumed,
}

impl TraceEventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceEventKind::NodeEntered => "node_entered",
            TraceEventKind::OutputsPublished => "outputs_published",
            TraceEventKind::BranchTaken => "branch_taken",
            TraceEventKind::MessageAppended => "message_appended",
            TraceEventKind::ToolInvoked => "tool_invoked",
            TraceEventKind::Suspended => "suspended",
            TraceEventKind::Resumed => "resumed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub step: u64,
    /// The node (or agent) the event belongs to.
    pub node_id: String,
    pub kind: TraceEventKind,
    pub detail: Option<Value>,
}

impl TraceEvent {
    pub fn to_json_line(&self) -> String {
        let mut object = Map::new();
        object.insert(
            "detail".into(),
            self.detail.clone().unwrap_or(Value::Null),
        );
        object.insert(
            "event".into(),
            Value::String(self.kind.as_str().to_string()),
        );
        object.insert("node_id".into(), Value::String(self.node_id.clone()));
        object.insert("step".into(), Value::Number(self.step.into()));
        Value::Object(object).to_string()
    }
}

/// Renders events as line-delimited JSON with a trailing newline.
pub fn trace_to_text(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    for event in events {
        out.push_str(&event.to_json_line());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_have_sorted_keys_and_stable_bytes() {
        let event = TraceEvent {
            step: 3,
            node_id: "inc".into(),
            kind: TraceEventKind::BranchTaken,
            detail: Some(serde_json::json!({"branch": "next"})),
        };
        assert_eq!(
            event.to_json_line(),
            r#"{"detail":{"branch":"next"},"event":"branch_taken","node_id":"inc","step":3}"#
        );
        assert_eq!(event.to_json_line(), event.to_json_line());
    }
}
