//! Document serialization: canonical JSON/YAML with symbolic references.
//!
//! Components are expanded at their first occurrence in emission order and
//! referenced as `$component_ref:<id>` everywhere else. Map keys are emitted
//! in sorted order, making `serialize` byte-deterministic for a given
//! document.

mod de;
mod plugin;
mod ser;

pub use de::{deserialize, deserialize_with_plugins, Deserialized};
pub use plugin::{is_builtin_component_type, PluginRegistry, SerializationPlugin};
pub use ser::{document_to_value, serialize, serialize_with_plugins};

use crate::document::DocumentError;

/// Textual prefix of a symbolic component reference.
pub const COMPONENT_REF_PREFIX: &str = "$component_ref:";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Yaml,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Yaml => "yaml",
        }
    }

    pub fn parse(s: &str) -> Option<Format> {
        match s {
            "json" => Some(Format::Json),
            "yaml" | "yml" => Some(Format::Yaml),
            _ => None,
        }
    }

    /// Guesses the format from a file extension, defaulting to JSON.
    pub fn from_path(path: &std::path::Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("yaml") | Some("yml") => Format::Yaml,
            _ => Format::Json,
        }
    }
}

impl std::fmt::Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Re-serializes a document text in another format. The composition of
/// deserialize and serialize, so semantics are preserved exactly.
pub fn convert(text: &str, from: Format, to: Format) -> Result<String, DocumentError> {
    let parsed = deserialize(text, from)?;
    Ok(serialize(&parsed.document, to))
}
