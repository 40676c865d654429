//! Serialization plugins: extension component types beyond the built-in set.
//!
//! Plugins only handle serialization. Extension components deserialize and
//! validate, but the execution engine treats them as unsupported.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{Map, Value};

use crate::document::DocumentError;
use crate::model::ExtensionComponent;

const BUILTIN_COMPONENT_TYPES: [&str; 21] = [
    "Agent",
    "LlmConfig",
    "VllmConfig",
    "ServerTool",
    "ClientTool",
    "RemoteTool",
    "MCPTool",
    "Flow",
    "StartNode",
    "EndNode",
    "LlmNode",
    "ApiNode",
    "AgentNode",
    "FlowNode",
    "MapNode",
    "BranchingNode",
    "ToolNode",
    "InputMessageNode",
    "OutputMessageNode",
    "ControlFlowEdge",
    "DataFlowEdge",
];

pub fn is_builtin_component_type(component_type: &str) -> bool {
    BUILTIN_COMPONENT_TYPES.contains(&component_type)
}

/// Hooks for serializing component types the core model does not know.
/// `serialize` returns the extra fields beyond the base component fields;
/// `deserialize` receives exactly those extra fields.
pub trait SerializationPlugin: Send + Sync {
    fn plugin_name(&self) -> &str;
    fn plugin_version(&self) -> &str;
    fn supported_component_types(&self) -> Vec<String>;
    fn serialize(&self, component: &ExtensionComponent)
        -> Result<Map<String, Value>, DocumentError>;
    fn deserialize(
        &self,
        component_type: &str,
        fields: &Map<String, Value>,
    ) -> Result<ExtensionComponent, DocumentError>;
}

/// Write-once-then-read-many plugin table keyed by component type.
#[derive(Default)]
pub struct PluginRegistry {
    by_type: BTreeMap<String, Arc<dyn SerializationPlugin>>,
}

impl PluginRegistry {
    pub fn new() -> PluginRegistry {
        PluginRegistry::default()
    }

    /// Registers a plugin for all its supported component types. Types must
    /// not shadow built-ins or previously registered plugins.
    pub fn register(&mut self, plugin: Arc<dyn SerializationPlugin>) -> Result<(), DocumentError> {
        let types = plugin.supported_component_types();
        for ty in &types {
            if is_builtin_component_type(ty) || self.by_type.contains_key(ty) {
                return Err(DocumentError::TypeConflict {
                    component_type: ty.clone(),
                });
            }
        }
        for ty in types {
            self.by_type.insert(ty, Arc::clone(&plugin));
        }
        Ok(())
    }

    pub fn plugin_for(&self, component_type: &str) -> Option<&Arc<dyn SerializationPlugin>> {
        self.by_type.get(component_type)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct StubPlugin;

    impl SerializationPlugin for StubPlugin {
        fn plugin_name(&self) -> &str {
            "stub"
        }
        fn plugin_version(&self) -> &str {
            "0.0.1"
        }
        fn supported_component_types(&self) -> Vec<String> {
            vec!["MemoryStub".to_string()]
        }
        fn serialize(
            &self,
            component: &ExtensionComponent,
        ) -> Result<Map<String, Value>, DocumentError> {
            Ok(component.payload.clone())
        }
        fn deserialize(
            &self,
            component_type: &str,
            fields: &Map<String, Value>,
        ) -> Result<ExtensionComponent, DocumentError> {
            Ok(ExtensionComponent {
                component_type: component_type.to_string(),
                payload: fields.clone(),
            })
        }
    }

    struct ShadowingPlugin;

    impl SerializationPlugin for ShadowingPlugin {
        fn plugin_name(&self) -> &str {
            "shadow"
        }
        fn plugin_version(&self) -> &str {
            "0.0.1"
        }
        fn supported_component_types(&self) -> Vec<String> {
            vec!["Flow".to_string()]
        }
        fn serialize(
            &self,
            _component: &ExtensionComponent,
        ) -> Result<Map<String, Value>, DocumentError> {
            unreachable!()
        }
        fn deserialize(
            &self,
            _component_type: &str,
            _fields: &Map<String, Value>,
        ) -> Result<ExtensionComponent, DocumentError> {
            unreachable!()
        }
    }

    #[test]
    fn plugins_may_not_shadow_builtins() {
        let mut registry = PluginRegistry::new();
        let err = registry.register(Arc::new(ShadowingPlugin)).unwrap_err();
        assert!(matches!(err, DocumentError::TypeConflict { .. }));
    }

    #[test]
    fn duplicate_registration_conflicts() {
        let mut registry = PluginRegistry::new();
        registry.register(Arc::new(StubPlugin)).unwrap();
        let err = registry.register(Arc::new(StubPlugin)).unwrap_err();
        assert!(matches!(err, DocumentError::TypeConflict { .. }));
    }
}
