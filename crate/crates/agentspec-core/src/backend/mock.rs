//! Deterministic scripted mock backend.
//!
//! A script is an ordered list of rules, each pairing a matcher (substring,
//! regex, or call position) with a canned response. On every generate call
//! the first unconsumed matching rule fires and is consumed; replaying a
//! session with the same script reproduces the identical response sequence.

use regex::Regex;
use serde::Deserialize;
use serde_json::{Map, Value};

use super::{BackendError, LlmBackend, LlmResponse, ToolSpec};
use crate::model::{LlmConfig, Message};

#[derive(Debug, Clone)]
pub enum MockMatcher {
    /// Substring match against the rendered prompt (all message contents).
    Contains(String),
    Regex(Regex),
    /// Matches the n-th generate call, zero-based.
    Position(usize),
    Always,
}

impl MockMatcher {
    fn matches(&self, subject: &str, call_index: usize) -> bool {
        match self {
            MockMatcher::Contains(needle) => subject.contains(needle),
            MockMatcher::Regex(re) => re.is_match(subject),
            MockMatcher::Position(index) => *index == call_index,
            MockMatcher::Always => true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MockRule {
    pub matcher: MockMatcher,
    pub response: LlmResponse,
}

impl MockRule {
    pub fn contains(needle: impl Into<String>, response: LlmResponse) -> MockRule {
        MockRule {
            matcher: MockMatcher::Contains(needle.into()),
            response,
        }
    }

    pub fn at_position(index: usize, response: LlmResponse) -> MockRule {
        MockRule {
            matcher: MockMatcher::Position(index),
            response,
        }
    }

    pub fn always(response: LlmResponse) -> MockRule {
        MockRule {
            matcher: MockMatcher::Always,
            response,
        }
    }
}

/// An ordered, consumable response script.
#[derive(Debug, Clone, Default)]
pub struct MockScript {
    pub rules: Vec<MockRule>,
}

impl MockScript {
    pub fn new(rules: Vec<MockRule>) -> MockScript {
        MockScript { rules }
    }

    pub fn from_json(text: &str) -> Result<MockScript, BackendError> {
        let file: ScriptFile =
            serde_json::from_str(text).map_err(|e| BackendError::InvalidScript {
                reason: e.to_string(),
            })?;
        file.into_script()
    }
}

#[derive(Deserialize)]
struct ScriptFile {
    rules: Vec<RuleFile>,
}

#[derive(Deserialize)]
struct RuleFile {
    #[serde(default)]
    when: Option<WhenFile>,
    respond: RespondFile,
}

#[derive(Deserialize)]
struct WhenFile {
    #[serde(default)]
    contains: Option<String>,
    #[serde(default)]
    regex: Option<String>,
    #[serde(default)]
    position: Option<usize>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RespondFile {
    Text {
        text: String,
    },
    ToolCall {
        tool_call: ToolCallFile,
    },
    Final {
        #[serde(rename = "final")]
        values: Map<String, Value>,
    },
}

#[derive(Deserialize)]
struct ToolCallFile {
    name: String,
    #[serde(default)]
    args: Map<String, Value>,
}

impl ScriptFile {
    fn into_script(self) -> Result<MockScript, BackendError> {
        let mut rules = Vec::with_capacity(self.rules.len());
        for rule in self.rules {
            let matcher = match rule.when {
                None => MockMatcher::Always,
                Some(when) => match (when.contains, when.regex, when.position) {
                    (Some(needle), None, None) => MockMatcher::Contains(needle),
                    (None, Some(pattern), None) => MockMatcher::Regex(
                        Regex::new(&pattern).map_err(|e| BackendError::InvalidScript {
                            reason: e.to_string(),
                        })?,
                    ),
                    (None, None, Some(index)) => MockMatcher::Position(index),
                    _ => {
                        return Err(BackendError::InvalidScript {
                            reason: "`when` must set exactly one of contains, regex, position"
                                .to_string(),
                        })
                    }
                },
            };
            let response = match rule.respond {
                RespondFile::Text { text } => LlmResponse::text(text),
                RespondFile::ToolCall { tool_call } => {
                    if tool_call.name.is_empty() {
                        return Err(BackendError::InvalidScript {
                            reason: "tool_call.name must be non-empty".to_string(),
                        });
                    }
                    LlmResponse::tool_call(tool_call.name, tool_call.args)
                }
                RespondFile::Final { values } => LlmResponse::final_outputs(values),
            };
            rules.push(MockRule { matcher, response });
        }
        Ok(MockScript { rules })
    }
}

/// A scripted backend instance: one session's cursor over a script.
pub struct MockBackend {
    rules: Vec<(MockRule, bool)>,
    calls: usize,
}

impl MockBackend {
    pub fn new(script: MockScript) -> MockBackend {
        MockBackend {
            rules: script.rules.into_iter().map(|r| (r, false)).collect(),
            calls: 0,
        }
    }

    pub fn calls(&self) -> usize {
        self.calls
    }
}

impl LlmBackend for MockBackend {
    fn generate(
        &mut self,
        _config: &LlmConfig,
        messages: &[Message],
        _tools: &[ToolSpec],
    ) -> Result<LlmResponse, BackendError> {
        let subject: String = messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        let call_index = self.calls;
        self.calls += 1;
        for (rule, consumed) in self.rules.iter_mut() {
            if !*consumed && rule.matcher.matches(&subject, call_index) {
                *consumed = true;
                return Ok(rule.response.clone());
            }
        }
        Err(BackendError::ScriptExhausted { call_index })
    }
}
