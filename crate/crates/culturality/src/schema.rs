//! Attribute taxonomy: names, categories, and importance weights.
//!
//! A schema fixes the order of the behavioral attributes; every feature
//! vector in the crate is aligned to that order. The bundled default schema
//! carries the 28 attributes of the shipped survey, split into the
//! modernization, intervening, and resultant layers.

use std::collections::BTreeMap;

use serde::Deserialize;
use thiserror::Error;

/// Which layer of the three-part behavioral model an attribute belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Modernization,
    Intervening,
    Resultant,
}

/// One named attribute: category, importance weight, and the fixed
/// percentage scale `[0, 100]`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct AttributeDef {
    pub name: String,
    pub category: Category,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_weight() -> f64 {
    1.0
}

/// Ordered attribute list with a name index. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSchema {
    attributes: Vec<AttributeDef>,
    index: BTreeMap<String, usize>,
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("schema has no attributes")]
    Empty,
    #[error("duplicate attribute name {0:?}")]
    DuplicateName(String),
    #[error("attribute {name:?} has invalid weight {weight} (must be finite and >= 0)")]
    InvalidWeight { name: String, weight: f64 },
    #[error("schema config parse error: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Deserialize)]
struct SchemaFile {
    #[serde(rename = "attribute")]
    attributes: Vec<AttributeDef>,
}

const DEFAULT_SCHEMA_TOML: &str = include_str!("../data/schema.toml");

impl AttributeSchema {
    /// Builds a schema, enforcing unique names and non-negative weights.
    pub fn new(attributes: Vec<AttributeDef>) -> Result<Self, SchemaError> {
        if attributes.is_empty() {
            return Err(SchemaError::Empty);
        }
        let mut index = BTreeMap::new();
        for (i, attr) in attributes.iter().enumerate() {
            if !(attr.weight.is_finite() && attr.weight >= 0.0) {
                return Err(SchemaError::InvalidWeight {
                    name: attr.name.clone(),
                    weight: attr.weight,
                });
            }
            if index.insert(attr.name.clone(), i).is_some() {
                return Err(SchemaError::DuplicateName(attr.name.clone()));
            }
        }
        Ok(Self { attributes, index })
    }

    /// Parses a schema from the TOML config format (`[[attribute]]` tables
    /// with `name`, `category`, and optional `weight`).
    pub fn from_toml(text: &str) -> Result<Self, SchemaError> {
        let file: SchemaFile = toml::from_str(text)?;
        Self::new(file.attributes)
    }

    /// The schema of the bundled survey: 28 attributes in table row order.
    pub fn bundled() -> Self {
        Self::from_toml(DEFAULT_SCHEMA_TOML).expect("bundled schema is valid")
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn attributes(&self) -> &[AttributeDef] {
        &self.attributes
    }

    /// Position of an attribute in schema order.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Importance weights in schema order.
    pub fn weights(&self) -> Vec<f64> {
        self.attributes.iter().map(|a| a.weight).collect()
    }

    /// Indices of the attributes in the given category, in schema order.
    pub fn category_indices(&self, category: Category) -> Vec<usize> {
        self.attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.category == category)
            .map(|(i, _)| i)
            .collect()
    }
}
