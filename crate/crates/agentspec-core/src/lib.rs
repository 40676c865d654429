//! Core library for declarative agent and workflow documents: an in-memory
//! component model, canonical JSON/YAML serialization with symbolic
//! references, placeholder templating, static validation, a suspendable
//! execution engine, pluggable LLM/tool backends, and a conformance and
//! evaluation harness.

pub mod backend;
pub mod diagnostics;
pub mod document;
pub mod engine;
pub mod harness;
pub mod io;
pub mod model;
pub mod property;
pub mod template;
pub mod validate;

pub use diagnostics::{Diagnostic, DiagnosticCode, Severity};
pub use document::{DocumentBuilder, DocumentError, SpecDocument, SUPPORTED_VERSION};
pub use io::Format;
pub use model::{Component, ComponentId, ComponentKind};
pub use property::{Property, PropertyType};
