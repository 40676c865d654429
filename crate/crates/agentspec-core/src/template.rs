//! Placeholder templates: `{{name}}` slots in configuration strings.
//!
//! Placeholders induce string-typed inputs on the owning component and are
//! substituted at execution time. There is no escaping syntax, so a literal
//! `{{` cannot be represented.

use std::collections::BTreeMap;

use serde_json::Value;
use thiserror::Error;

use crate::model::value_to_text;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TemplateError {
    #[error("unclosed placeholder starting at byte {position}")]
    UnclosedPlaceholder { position: usize },
    #[error("invalid placeholder name `{name}`")]
    InvalidName { name: String },
    #[error("unbound placeholder `{name}`")]
    UnboundPlaceholder { name: String },
}

/// A parsed template: the raw text plus its placeholder names in order of
/// first occurrence, deduplicated.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    raw: String,
    placeholders: Vec<String>,
}

impl Template {
    pub fn parse(raw: &str) -> Result<Template, TemplateError> {
        Ok(Template {
            raw: raw.to_string(),
            placeholders: extract_placeholders(raw)?,
        })
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn placeholders(&self) -> &[String] {
        &self.placeholders
    }

    pub fn render(&self, bindings: &BTreeMap<String, Value>) -> Result<String, TemplateError> {
        render(&self.raw, bindings)
    }
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

enum Segment<'a> {
    Literal(&'a str),
    Placeholder(String),
}

fn scan(raw: &str) -> Result<Vec<Segment<'_>>, TemplateError> {
    let mut segments = Vec::new();
    let mut rest = raw;
    let mut offset = 0;
    while let Some(open) = rest.find("{{") {
        if open > 0 {
            segments.push(Segment::Literal(&rest[..open]));
        }
        let after = &rest[open + 2..];
        let close = match after.find("}}") {
            Some(c) => c,
            None => {
                return Err(TemplateError::UnclosedPlaceholder {
                    position: offset + open,
                })
            }
        };
        let name = after[..close].trim();
        if !valid_name(name) {
            return Err(TemplateError::InvalidName {
                name: after[..close].to_string(),
            });
        }
        segments.push(Segment::Placeholder(name.to_string()));
        offset += open + 2 + close + 2;
        rest = &after[close + 2..];
    }
    if !rest.is_empty() {
        segments.push(Segment::Literal(rest));
    }
    Ok(segments)
}

/// Placeholder names in order of first occurrence, duplicates removed.
/// Whitespace inside the braces is trimmed.
pub fn extract_placeholders(raw: &str) -> Result<Vec<String>, TemplateError> {
    let mut names = Vec::new();
    for segment in scan(raw)? {
        if let Segment::Placeholder(name) = segment {
            if !names.contains(&name) {
                names.push(name);
            }
        }
    }
    Ok(names)
}

/// Substitutes every placeholder with its bound value's string form.
pub fn render(raw: &str, bindings: &BTreeMap<String, Value>) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(raw.len());
    for segment in scan(raw)? {
        match segment {
            Segment::Literal(text) => out.push_str(text),
            Segment::Placeholder(name) => match bindings.get(&name) {
                Some(value) => out.push_str(&value_to_text(value)),
                None => return Err(TemplateError::UnboundPlaceholder { name }),
            },
        }
    }
    Ok(out)
}
