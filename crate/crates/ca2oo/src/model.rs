//! The conceptual model produced by derivation: classes with attributes,
//! services and transactions, plus structural relationships between classes.

use std::fmt;

use crate::requirements::CardMax;
use crate::trace::DerivationTrace;

/// Default maximum length for string attributes when no size is declared.
pub const DEFAULT_STRING_SIZE: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataType {
    Autonumeric,
    Nat,
    Int,
    Real,
    String(u32),
    Text,
    Date,
    Time,
    DateTime,
    Bool,
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataType::Autonumeric => write!(f, "Autonumeric"),
            DataType::Nat => write!(f, "Nat"),
            DataType::Int => write!(f, "Int"),
            DataType::Real => write!(f, "Real"),
            DataType::String(size) => write!(f, "String({size})"),
            DataType::Text => write!(f, "Text"),
            DataType::Date => write!(f, "Date"),
            DataType::Time => write!(f, "Time"),
            DataType::DateTime => write!(f, "DateTime"),
            DataType::Bool => write!(f, "Bool"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttributeKind {
    Constant,
    Variable,
}

impl AttributeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttributeKind::Constant => "constant",
            AttributeKind::Variable => "variable",
        }
    }
}

/// Where a model element came from: the event that produced it and a sequence
/// number within that event. Revision-pass elements sort after every event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub event: String,
    pub seq: u32,
    pub revision: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub is_id: bool,
    pub kind: AttributeKind,
    pub data_type: DataType,
    pub requested_on_creation: bool,
    pub nulls_allowed: bool,
    pub default_value: Option<String>,
    pub enum_literals: Option<Vec<String>>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServiceKind {
    Creation,
    EndOfEditing,
    Setter,
    SharedInsert,
    SharedDelete,
}

impl ServiceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ServiceKind::Creation => "creation",
            ServiceKind::EndOfEditing => "end_of_editing",
            ServiceKind::Setter => "setter",
            ServiceKind::SharedInsert => "shared_insert",
            ServiceKind::SharedDelete => "shared_delete",
        }
    }
}

/// Argument data types: either a plain data type mirroring an attribute or an
/// object-valued reference to a class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArgType {
    Data(DataType),
    Object(String),
}

impl fmt::Display for ArgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArgType::Data(d) => write!(f, "{d}"),
            ArgType::Object(class) => write!(f, "{class}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Argument {
    pub name: String,
    pub data_type: ArgType,
    pub nulls_allowed: bool,
    /// Event whose processing added this argument. Arguments added by events
    /// later than the owning service's event are the targets of the
    /// creation-service revision pass.
    pub source_event: String,
}

/// `attribute <- argument` valuation pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Valuation {
    pub attribute: String,
    pub argument: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Service {
    pub name: String,
    pub kind: ServiceKind,
    pub internal: bool,
    pub args: Vec<Argument>,
    pub valuations: Vec<Valuation>,
    pub provenance: Provenance,
}

/// One step of a transaction: a service invocation, possibly passing NULL for
/// some arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub class: String,
    pub service: String,
    pub null_args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub name: String,
    pub steps: Vec<Step>,
    pub formula_note: Option<String>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Class {
    pub name: String,
    pub attributes: Vec<Attribute>,
    pub services: Vec<Service>,
    pub transactions: Vec<Transaction>,
    pub provenance: Provenance,
}

impl Class {
    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn service(&self, name: &str) -> Option<&Service> {
        self.services.iter().find(|s| s.name == name)
    }

    pub fn transaction(&self, name: &str) -> Option<&Transaction> {
        self.transactions.iter().find(|t| t.name == name)
    }

    pub fn creation_service(&self) -> Option<&Service> {
        self.services.iter().find(|s| s.kind == ServiceKind::Creation)
    }

    pub fn identifier_attributes(&self) -> impl Iterator<Item = &Attribute> {
        self.attributes.iter().filter(|a| a.is_id)
    }
}

/// Whether a relationship came from an iteration substructure or a reference
/// field (and, for references, whether the owning event created the class).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelOrigin {
    Iteration,
    Reference { creation: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationshipSide {
    pub class: String,
    pub role: String,
    pub min: u8,
    pub max: CardMax,
}

impl RelationshipSide {
    pub fn card(&self) -> String {
        format!("{}:{}", self.min, self.max.as_str())
    }
}

/// A structural relationship. `side_a` is the referenced (or containing)
/// class, `side_b` the referencer (or contained) class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuralRelationship {
    pub name: String,
    pub side_a: RelationshipSide,
    pub side_b: RelationshipSide,
    pub dynamic: bool,
    pub origin: RelOrigin,
    pub provenance: Provenance,
}

impl StructuralRelationship {
    pub fn involves(&self, class: &str) -> bool {
        self.side_a.class == class || self.side_b.class == class
    }

    /// The opposite side of the relationship, from `class`'s point of view.
    pub fn other_side(&self, class: &str) -> Option<&RelationshipSide> {
        if self.side_a.class == class {
            Some(&self.side_b)
        } else if self.side_b.class == class {
            Some(&self.side_a)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConceptualModel {
    pub classes: Vec<Class>,
    pub relationships: Vec<StructuralRelationship>,
    pub trace: DerivationTrace,
}

impl ConceptualModel {
    pub fn class(&self, name: &str) -> Option<&Class> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn class_mut(&mut self, name: &str) -> Option<&mut Class> {
        self.classes.iter_mut().find(|c| c.name == name)
    }

    pub fn relationship(&self, name: &str) -> Option<&StructuralRelationship> {
        self.relationships.iter().find(|r| r.name == name)
    }

    pub fn relationships_of(&self, class: &str) -> impl Iterator<Item = &StructuralRelationship> {
        self.relationships.iter().filter(move |r| r.involves(class))
    }

    /// Structural equality through the canonical emission, the comparator
    /// used by order-independence checks.
    pub fn structurally_equals(&self, other: &ConceptualModel) -> bool {
        crate::emit::emit_canonical(self) == crate::emit::emit_canonical(other)
    }

    /// Check the model invariants, returning a list of violations. Used by
    /// tests; an empty list means the model is well formed.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut names = std::collections::BTreeSet::new();
        for class in &self.classes {
            if !names.insert(class.name.clone()) {
                out.push(format!("duplicate class name {}", class.name));
            }
            if class.identifier_attributes().next().is_none() {
                out.push(format!("class {} has no identifier attribute", class.name));
            }
            let mut attr_names = std::collections::BTreeSet::new();
            for attr in &class.attributes {
                if !attr_names.insert(&attr.name) {
                    out.push(format!("duplicate attribute {}.{}", class.name, attr.name));
                }
                if attr.is_id
                    && (attr.kind != AttributeKind::Constant
                        || attr.nulls_allowed
                        || !attr.requested_on_creation)
                {
                    out.push(format!(
                        "identifier attribute {}.{} must be constant, requested and non-null",
                        class.name, attr.name
                    ));
                }
                if let DataType::String(size) = attr.data_type {
                    if size == 0 {
                        out.push(format!(
                            "string attribute {}.{} must carry a size >= 1",
                            class.name, attr.name
                        ));
                    }
                }
            }
        }
        for rel in &self.relationships {
            for side in [&rel.side_a, &rel.side_b] {
                if self.class(&side.class).is_none() {
                    out.push(format!(
                        "relationship {} endpoint {} names no class",
                        rel.name, side.class
                    ));
                }
            }
        }
        out
    }
}
