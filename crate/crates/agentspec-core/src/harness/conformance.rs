//! Golden-file conformance runner.
//!
//! A case directory holds `spec.json` and, for runnable cases, a
//! `scenario.json` (mock script, inputs, resume payloads, stub tools),
//! `expected.json` (the final outcome), and `trace.golden` (byte-exact
//! line-delimited trace). Cases without a scenario are static: the document
//! must deserialize, validate clean, and round-trip byte-for-byte.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::HarnessError;
use crate::backend::{MockScript, ToolRegistry};
use crate::document::SpecDocument;
use crate::engine::{
    Environment, ExecutionSession, ExecutionStatus, ResumePayload, SessionOptions,
};
use crate::io::{deserialize, serialize, Format};
use crate::validate::validate_document;

/// A fully scripted run: everything the engine will observe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub entry_id: String,
    #[serde(default)]
    pub inputs: Map<String, Value>,
    /// Mock script in the script-file JSON shape.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resume: Vec<ResumeSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tools: BTreeMap<String, StubBehavior>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_limit: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ResumeSpec {
    User {
        user_message: String,
    },
    ClientTool {
        client_tool_result: ClientToolResultSpec,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClientToolResultSpec {
    pub call_id: String,
    pub outputs: Map<String, Value>,
}

/// Deterministic stub behaviors a scenario can bind to server tool names.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StubBehavior {
    /// One of the built-in behaviors: `double`, `increment`, `upper`,
    /// `echo`, `concat`.
    Named(String),
    /// Ignores arguments and returns a fixed dictionary.
    Const {
        #[serde(rename = "const")]
        value: Map<String, Value>,
    },
}

/// Builds a tool registry out of scenario stub bindings.
pub fn stub_registry(tools: &BTreeMap<String, StubBehavior>) -> Result<ToolRegistry, HarnessError> {
    let mut registry = ToolRegistry::new();
    for (name, behavior) in tools {
        match behavior {
            StubBehavior::Const { value } => {
                let value = value.clone();
                registry.register(name.clone(), move |_args| Ok(value.clone()));
            }
            StubBehavior::Named(kind) => match kind.as_str() {
                "double" => registry.register(name.clone(), |args| {
                    let x = args.get("x").and_then(Value::as_i64).ok_or("missing x")?;
                    Ok(one("y", Value::Number((x * 2).into())))
                }),
                "increment" => registry.register(name.clone(), |args| {
                    let x = args.get("x").and_then(Value::as_i64).ok_or("missing x")?;
                    Ok(one("x", Value::Number((x + 1).into())))
                }),
                "upper" => registry.register(name.clone(), |args| {
                    let mut out = Map::new();
                    for (key, value) in args {
                        let s = value.as_str().ok_or("upper expects string arguments")?;
                        out.insert(key.clone(), Value::String(s.to_uppercase()));
                    }
                    Ok(out)
                }),
                "echo" => registry.register(name.clone(), |args| Ok(args.clone())),
                "concat" => registry.register(name.clone(), |args| {
                    let a = args.get("a").and_then(Value::as_str).ok_or("missing a")?;
                    let b = args.get("b").and_then(Value::as_str).ok_or("missing b")?;
                    Ok(one("c", Value::String(format!("{a}|{b}"))))
                }),
                other => {
                    return Err(HarnessError::CaseLoad {
                        path: "scenario.json".to_string(),
                        reason: format!("unknown stub behavior `{other}`"),
                    })
                }
            },
        }
    }
    Ok(registry)
}

fn one(key: &str, value: Value) -> Map<String, Value> {
    let mut out = Map::new();
    out.insert(key.to_string(), value);
    out
}

/// Terminal outcome of a scenario run, as compared against `expected.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CaseOutcome {
    Finished {
        outputs: Map<String, Value>,
    },
    AwaitingUserInput {
        #[serde(default)]
        prompt: Option<String>,
    },
    AwaitingClientTool {
        call_id: String,
        tool_name: String,
        args: Map<String, Value>,
    },
    Error {
        error: String,
    },
}

fn status_outcome(status: ExecutionStatus) -> CaseOutcome {
    match status {
        ExecutionStatus::Finished { outputs } => CaseOutcome::Finished {
            outputs: outputs.into_iter().collect(),
        },
        ExecutionStatus::AwaitingUserInput { prompt } => CaseOutcome::AwaitingUserInput { prompt },
        ExecutionStatus::AwaitingClientTool {
            call_id,
            tool_name,
            args,
        } => CaseOutcome::AwaitingClientTool {
            call_id,
            tool_name,
            args,
        },
    }
}

/// Runs a scenario to its terminal outcome, feeding resume payloads in
/// order. Returns the outcome plus the trace text (also on failure).
pub fn run_scenario(
    document: &Arc<SpecDocument>,
    scenario: &Scenario,
) -> Result<(CaseOutcome, String), HarnessError> {
    let script = match &scenario.script {
        Some(value) => {
            MockScript::from_json(&value.to_string()).map_err(|e| HarnessError::CaseLoad {
                path: "scenario.json".to_string(),
                reason: e.to_string(),
            })?
        }
        None => MockScript::default(),
    };
    let registry = stub_registry(&scenario.tools)?;
    let env = Environment::mock(script).with_tools(registry);
    let options = SessionOptions {
        step_limit: scenario
            .step_limit
            .unwrap_or(SessionOptions::default().step_limit),
    };
    let inputs: BTreeMap<String, Value> = scenario
        .inputs
        .iter()
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();

    let mut session = match ExecutionSession::new(
        Arc::clone(document),
        &scenario.entry_id.as_str().into(),
        inputs,
        env,
        options,
    ) {
        Ok(session) => session,
        Err(e) => {
            return Ok((
                CaseOutcome::Error {
                    error: e.code().to_string(),
                },
                String::new(),
            ))
        }
    };

    let mut result = session.run();
    let mut payloads = scenario.resume.iter();
    let outcome = loop {
        match result {
            Ok(ExecutionStatus::Finished { outputs }) => {
                break CaseOutcome::Finished {
                    outputs: outputs.into_iter().collect(),
                }
            }
            Ok(status) => match payloads.next() {
                None => break status_outcome(status),
                Some(ResumeSpec::User { user_message }) => {
                    result = session.resume(ResumePayload::UserMessage {
                        text: user_message.clone(),
                    });
                }
                Some(ResumeSpec::ClientTool { client_tool_result }) => {
                    result = session.resume(ResumePayload::ClientToolResult {
                        call_id: client_tool_result.call_id.clone(),
                        outputs: client_tool_result.outputs.clone(),
                    });
                }
            },
            Err(e) => {
                break CaseOutcome::Error {
                    error: e.code().to_string(),
                }
            }
        }
    };
    Ok((outcome, session.trace_text()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub name: String,
    pub passed: bool,
    /// One-line explanation of the first difference, for failures.
    pub detail: Option<String>,
}

impl CaseResult {
    fn pass(name: &str) -> CaseResult {
        CaseResult {
            name: name.to_string(),
            passed: true,
            detail: None,
        }
    }

    fn fail(name: &str, detail: String) -> CaseResult {
        CaseResult {
            name: name.to_string(),
            passed: false,
            detail: Some(detail),
        }
    }
}

fn read_file(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::CaseLoad {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

fn first_line_diff(actual: &str, expected: &str) -> String {
    let mut actual_lines = actual.lines();
    let mut expected_lines = expected.lines();
    let mut line = 0usize;
    loop {
        line += 1;
        match (actual_lines.next(), expected_lines.next()) {
            (None, None) => return "texts differ in trailing bytes".to_string(),
            (a, e) if a != e => {
                return format!(
                    "line {line}: expected {} / got {}",
                    e.unwrap_or("<eof>"),
                    a.unwrap_or("<eof>")
                )
            }
            _ => {}
        }
    }
}

/// Runs one conformance case directory. Pass requires the outcome to equal
/// `expected.json` and the trace to equal `trace.golden` byte-for-byte;
/// static cases (no scenario) require clean validation and a byte-exact
/// serialization round-trip instead.
pub fn run_conformance_case(dir: &Path) -> Result<CaseResult, HarnessError> {
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_else(|| dir.display().to_string());
    let spec_text = read_file(&dir.join("spec.json"))?;
    let parsed = match deserialize(&spec_text, Format::Json) {
        Ok(parsed) => parsed,
        Err(e) => return Ok(CaseResult::fail(&name, format!("spec does not parse: {e}"))),
    };
    if !parsed.warnings.is_empty() {
        return Ok(CaseResult::fail(
            &name,
            format!("spec has warnings: {}", parsed.warnings[0]),
        ));
    }
    let document = Arc::new(parsed.document);

    let diagnostics = validate_document(&document);
    if !diagnostics.is_empty() {
        return Ok(CaseResult::fail(
            &name,
            format!("spec does not validate: {}", diagnostics[0]),
        ));
    }

    // Corpus documents are stored canonically; re-serialization must
    // reproduce the exact bytes, twice.
    let reserialized = serialize(&document, Format::Json);
    if reserialized != spec_text {
        return Ok(CaseResult::fail(
            &name,
            format!(
                "spec is not canonical: {}",
                first_line_diff(&reserialized, &spec_text)
            ),
        ));
    }
    if serialize(&document, Format::Json) != reserialized {
        return Ok(CaseResult::fail(&name, "serializer is not deterministic".into()));
    }

    let scenario_path = dir.join("scenario.json");
    if !scenario_path.exists() {
        return Ok(CaseResult::pass(&name));
    }

    let scenario: Scenario =
        serde_json::from_str(&read_file(&scenario_path)?).map_err(|e| HarnessError::CaseLoad {
            path: scenario_path.display().to_string(),
            reason: e.to_string(),
        })?;
    let expected_text = read_file(&dir.join("expected.json"))?;
    let expected: CaseOutcome =
        serde_json::from_str(&expected_text).map_err(|e| HarnessError::CaseLoad {
            path: dir.join("expected.json").display().to_string(),
            reason: e.to_string(),
        })?;
    let golden_trace = read_file(&dir.join("trace.golden"))?;

    let (outcome, trace) = run_scenario(&document, &scenario)?;
    if outcome != expected {
        return Ok(CaseResult::fail(
            &name,
            format!(
                "outcome mismatch: expected {} / got {}",
                serde_json::to_string(&expected).unwrap_or_default(),
                serde_json::to_string(&outcome).unwrap_or_default()
            ),
        ));
    }
    if trace != golden_trace {
        return Ok(CaseResult::fail(
            &name,
            format!("trace mismatch: {}", first_line_diff(&trace, &golden_trace)),
        ));
    }
    Ok(CaseResult::pass(&name))
}

/// Runs every case directory (those containing `spec.json`) under `dir`,
/// in name order.
pub fn run_conformance_dir(dir: &Path) -> Result<Vec<CaseResult>, HarnessError> {
    let mut case_dirs = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() && path.join("spec.json").exists() {
            case_dirs.push(path);
        }
    }
    case_dirs.sort();
    let mut results = Vec::with_capacity(case_dirs.len());
    for case_dir in case_dirs {
        results.push(run_conformance_case(&case_dir)?);
    }
    Ok(results)
}
