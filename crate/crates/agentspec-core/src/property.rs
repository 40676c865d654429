//! Input/output properties: named value contracts backed by JSON-schema objects.
//!
//! Every component input and output is a [`Property`]. Only a small schema
//! vocabulary is interpreted (`title`, `type`, `description`, `default`,
//! `items`, `properties`); any other keyword is preserved verbatim on
//! round-trips but not enforced.

use serde_json::{Map, Value};
use thiserror::Error;

/// The seven value kinds a property may declare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PropertyType {
    String,
    Number,
    Integer,
    Boolean,
    Object,
    Array,
    Null,
}

impl PropertyType {
    pub const ALL: [PropertyType; 7] = [
        PropertyType::String,
        PropertyType::Number,
        PropertyType::Integer,
        PropertyType::Boolean,
        PropertyType::Object,
        PropertyType::Array,
        PropertyType::Null,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PropertyType::String => "string",
            PropertyType::Number => "number",
            PropertyType::Integer => "integer",
            PropertyType::Boolean => "boolean",
            PropertyType::Object => "object",
            PropertyType::Array => "array",
            PropertyType::Null => "null",
        }
    }

    pub fn parse(s: &str) -> Option<PropertyType> {
        Self::ALL.iter().copied().find(|t| t.as_str() == s)
    }
}

impl std::fmt::Display for PropertyType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropertyError {
    #[error("property schema must be a JSON object")]
    SchemaNotObject,
    #[error("property schema is missing a non-empty `title`")]
    MissingTitle,
    #[error("property `{title}` is missing `type`")]
    MissingType { title: String },
    #[error("property `{title}` has unsupported type `{ty}`")]
    InvalidType { title: String, ty: String },
}

/// A named value contract. The schema object is the single source of truth;
/// accessors read the interpreted subset.
#[derive(Debug, Clone, PartialEq)]
pub struct Property {
    schema: Map<String, Value>,
}

impl Property {
    /// Validates the interpreted subset: non-empty `title` and a supported `type`.
    pub fn new(schema: Value) -> Result<Property, PropertyError> {
        let object = match schema {
            Value::Object(o) => o,
            _ => return Err(PropertyError::SchemaNotObject),
        };
        let title = property_name(&object)?;
        match object.get("type").and_then(Value::as_str) {
            Some(ty) if PropertyType::parse(ty).is_some() => {}
            Some(ty) => {
                return Err(PropertyError::InvalidType {
                    title: title.to_string(),
                    ty: ty.to_string(),
                })
            }
            None => {
                return Err(PropertyError::MissingType {
                    title: title.to_string(),
                })
            }
        }
        Ok(Property { schema: object })
    }

    pub fn typed(name: &str, ty: PropertyType) -> Property {
        let mut schema = Map::new();
        schema.insert("title".into(), Value::String(name.to_string()));
        schema.insert("type".into(), Value::String(ty.as_str().to_string()));
        Property { schema }
    }

    pub fn string(name: &str) -> Property {
        Self::typed(name, PropertyType::String)
    }

    pub fn integer(name: &str) -> Property {
        Self::typed(name, PropertyType::Integer)
    }

    pub fn number(name: &str) -> Property {
        Self::typed(name, PropertyType::Number)
    }

    pub fn boolean(name: &str) -> Property {
        Self::typed(name, PropertyType::Boolean)
    }

    pub fn object(name: &str) -> Property {
        Self::typed(name, PropertyType::Object)
    }

    /// An array property whose `items` schema carries the element type.
    pub fn array_of(name: &str, items: PropertyType) -> Property {
        let mut p = Self::typed(name, PropertyType::Array);
        let mut item_schema = Map::new();
        item_schema.insert("type".into(), Value::String(items.as_str().to_string()));
        p.schema.insert("items".into(), Value::Object(item_schema));
        p
    }

    pub fn with_default(mut self, value: Value) -> Property {
        self.schema.insert("default".into(), value);
        self
    }

    pub fn with_description(mut self, text: &str) -> Property {
        self.schema
            .insert("description".into(), Value::String(text.to_string()));
        self
    }

    /// The property's name, i.e. its schema `title`.
    pub fn name(&self) -> &str {
        self.schema
            .get("title")
            .and_then(Value::as_str)
            .expect("validated on construction")
    }

    pub fn type_kind(&self) -> PropertyType {
        self.schema
            .get("type")
            .and_then(Value::as_str)
            .and_then(PropertyType::parse)
            .expect("validated on construction")
    }

    pub fn description(&self) -> Option<&str> {
        self.schema.get("description").and_then(Value::as_str)
    }

    pub fn default_value(&self) -> Option<&Value> {
        self.schema.get("default")
    }

    /// Element type of an array property, when its `items.type` is declared.
    pub fn items_type(&self) -> Option<PropertyType> {
        self.schema
            .get("items")?
            .get("type")?
            .as_str()
            .and_then(PropertyType::parse)
    }

    pub fn schema(&self) -> &Map<String, Value> {
        &self.schema
    }

    pub fn to_value(&self) -> Value {
        Value::Object(self.schema.clone())
    }
}

/// Reads the name (`title`) out of a raw schema object.
pub fn property_name(schema: &Map<String, Value>) -> Result<&str, PropertyError> {
    match schema.get("title").and_then(Value::as_str) {
        Some(t) if !t.is_empty() => Ok(t),
        _ => Err(PropertyError::MissingTitle),
    }
}

/// Two properties are compatible when their type kinds are equal; arrays
/// additionally compare `items.type` when both declare one.
pub fn schema_compatible(a: &Property, b: &Property) -> bool {
    if a.type_kind() != b.type_kind() {
        return false;
    }
    if a.type_kind() == PropertyType::Array {
        if let (Some(ia), Some(ib)) = (a.items_type(), b.items_type()) {
            return ia == ib;
        }
    }
    true
}

/// Checks a runtime value against a property's declared type kind.
pub fn value_conforms(value: &Value, ty: PropertyType) -> bool {
    match ty {
        PropertyType::String => value.is_string(),
        PropertyType::Number => value.is_number(),
        PropertyType::Integer => value.as_i64().is_some() || value.as_u64().is_some(),
        PropertyType::Boolean => value.is_boolean(),
        PropertyType::Object => value.is_object(),
        PropertyType::Array => value.is_array(),
        PropertyType::Null => value.is_null(),
    }
}

/// Finds a property by name in a declared list.
pub fn find_property<'a>(list: &'a [Property], name: &str) -> Option<&'a Property> {
    list.iter().find(|p| p.name() == name)
}
