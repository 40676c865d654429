//! Coded diagnostics emitted by document analysis.
//!
//! Each code has a fixed severity. Diagnostics render as
//! `LEVEL CODE component_id: message`, one per line, machine-parsable.

use crate::document::DocumentError;

/// Target id used for document-level findings that have no component.
pub const DOCUMENT_TARGET: &str = "$document";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "ERROR",
            Severity::Warning => "WARNING",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DiagnosticCode {
    AgentMissingLlm,
    FlowMissingStart,
    FlowMultipleStart,
    CfDuplicateBranch,
    CfDanglingBranch,
    CfUnreachable,
    CfForeignNode,
    CfUnknownBranch,
    DfUnknownProperty,
    DfTypeMismatch,
    DfUnboundInput,
    DfForeignNode,
    IoDeclarationMismatch,
    ToolNameConflict,
    VersionMismatch,
    // Codes mapped from deserialization failures so that defect reports and
    // the CLI can speak one language for both phases.
    MissingVersion,
    DanglingReference,
    DuplicateDeclaration,
    UnknownComponentType,
    MalformedComponent,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::AgentMissingLlm => "AGENT_MISSING_LLM",
            DiagnosticCode::FlowMissingStart => "FLOW_MISSING_START",
            DiagnosticCode::FlowMultipleStart => "FLOW_MULTIPLE_START",
            DiagnosticCode::CfDuplicateBranch => "CF_DUPLICATE_BRANCH",
            DiagnosticCode::CfDanglingBranch => "CF_DANGLING_BRANCH",
            DiagnosticCode::CfUnreachable => "CF_UNREACHABLE",
            DiagnosticCode::CfForeignNode => "CF_FOREIGN_NODE",
            DiagnosticCode::CfUnknownBranch => "CF_UNKNOWN_BRANCH",
            DiagnosticCode::DfUnknownProperty => "DF_UNKNOWN_PROPERTY",
            DiagnosticCode::DfTypeMismatch => "DF_TYPE_MISMATCH",
            DiagnosticCode::DfUnboundInput => "DF_UNBOUND_INPUT",
            DiagnosticCode::DfForeignNode => "DF_FOREIGN_NODE",
            DiagnosticCode::IoDeclarationMismatch => "IO_DECLARATION_MISMATCH",
            DiagnosticCode::ToolNameConflict => "TOOL_NAME_CONFLICT",
            DiagnosticCode::VersionMismatch => "VERSION_MISMATCH",
            DiagnosticCode::MissingVersion => "MISSING_VERSION",
            DiagnosticCode::DanglingReference => "DANGLING_REFERENCE",
            DiagnosticCode::DuplicateDeclaration => "DUPLICATE_DECLARATION",
            DiagnosticCode::UnknownComponentType => "UNKNOWN_COMPONENT_TYPE",
            DiagnosticCode::MalformedComponent => "MALFORMED_COMPONENT",
        }
    }

    /// The code-to-severity mapping is fixed.
    pub fn severity(self) -> Severity {
        match self {
            DiagnosticCode::CfUnreachable
            | DiagnosticCode::DfUnboundInput
            | DiagnosticCode::VersionMismatch => Severity::Warning,
            _ => Severity::Error,
        }
    }

    pub fn parse(s: &str) -> Option<DiagnosticCode> {
        const ALL: [DiagnosticCode; 20] = [
            DiagnosticCode::AgentMissingLlm,
            DiagnosticCode::FlowMissingStart,
            DiagnosticCode::FlowMultipleStart,
            DiagnosticCode::CfDuplicateBranch,
            DiagnosticCode::CfDanglingBranch,
            DiagnosticCode::CfUnreachable,
            DiagnosticCode::CfForeignNode,
            DiagnosticCode::CfUnknownBranch,
            DiagnosticCode::DfUnknownProperty,
            DiagnosticCode::DfTypeMismatch,
            DiagnosticCode::DfUnboundInput,
            DiagnosticCode::DfForeignNode,
            DiagnosticCode::IoDeclarationMismatch,
            DiagnosticCode::ToolNameConflict,
            DiagnosticCode::VersionMismatch,
            DiagnosticCode::MissingVersion,
            DiagnosticCode::DanglingReference,
            DiagnosticCode::DuplicateDeclaration,
            DiagnosticCode::UnknownComponentType,
            DiagnosticCode::MalformedComponent,
        ];
        ALL.iter().copied().find(|c| c.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub component_id: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(
        code: DiagnosticCode,
        component_id: impl Into<String>,
        message: impl Into<String>,
    ) -> Diagnostic {
        Diagnostic {
            code,
            component_id: component_id.into(),
            message: message.into(),
        }
    }

    pub fn severity(&self) -> Severity {
        self.code.severity()
    }

    pub fn is_error(&self) -> bool {
        self.severity() == Severity::Error
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {} {}: {}",
            self.severity().as_str(),
            self.code.as_str(),
            self.component_id,
            self.message
        )
    }
}

/// Stable presentation order: component id, then code, then message.
pub fn sort_diagnostics(diagnostics: &mut [Diagnostic]) {
    diagnostics.sort_by(|a, b| {
        (a.component_id.as_str(), a.code.as_str(), a.message.as_str()).cmp(&(
            b.component_id.as_str(),
            b.code.as_str(),
            b.message.as_str(),
        ))
    });
}

pub fn render_diagnostics(diagnostics: &[Diagnostic]) -> String {
    let mut out = String::new();
    for d in diagnostics {
        out.push_str(&d.to_string());
        out.push('\n');
    }
    out
}

/// Maps a deserialization failure onto the diagnostic vocabulary so defect
/// reports cover both analysis phases.
pub fn document_error_diagnostic(err: &DocumentError) -> Diagnostic {
    match err {
        DocumentError::MissingVersion => Diagnostic::new(
            DiagnosticCode::MissingVersion,
            DOCUMENT_TARGET,
            err.to_string(),
        ),
        DocumentError::DanglingReference { id } => Diagnostic::new(
            DiagnosticCode::DanglingReference,
            id.as_str(),
            err.to_string(),
        ),
        DocumentError::DuplicateDeclaration { id } => Diagnostic::new(
            DiagnosticCode::DuplicateDeclaration,
            id.as_str(),
            err.to_string(),
        ),
        DocumentError::UnknownComponentType { id, .. } => Diagnostic::new(
            DiagnosticCode::UnknownComponentType,
            id.clone(),
            err.to_string(),
        ),
        DocumentError::WrongComponentKind { id, .. } => Diagnostic::new(
            DiagnosticCode::MalformedComponent,
            id.as_str(),
            err.to_string(),
        ),
        DocumentError::Malformed { context, .. } => Diagnostic::new(
            DiagnosticCode::MalformedComponent,
            context.clone(),
            err.to_string(),
        ),
        other => Diagnostic::new(
            DiagnosticCode::MalformedComponent,
            DOCUMENT_TARGET,
            other.to_string(),
        ),
    }
}
