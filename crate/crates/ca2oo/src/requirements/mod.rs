//! The requirements metamodel and the `.carm` DSL front end.
//!
//! A requirements model holds business processes, communicative events (each
//! with one message structure, a reaction specification and restriction
//! annotations), precedence edges between events, and the business-object
//! registry.

pub mod lexer;
pub mod parser;
pub mod printer;
pub mod validate;

use crate::diag::Pos;
use crate::message::{MessageStructure, ObjectRegistry};

pub use parser::parse_requirements;
pub use printer::print_canonical;
pub use validate::validate;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BusinessProcess {
    pub acronym: String,
    pub name: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReactionKind {
    Creation,
    Extension,
}

impl ReactionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReactionKind::Creation => "creation",
            ReactionKind::Extension => "extension",
        }
    }
}

/// How the information system reacts to an event occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReactionSpec {
    pub kind: ReactionKind,
    /// Base name for the reaction service, e.g. `place_order`.
    pub name: String,
    /// Explicit end-of-editing flag; `None` means the default (enabled).
    pub end_of_editing: Option<bool>,
    pub pos: Pos,
}

impl ReactionSpec {
    pub fn end_of_editing_enabled(&self) -> bool {
        self.end_of_editing.unwrap_or(true)
    }
}

/// A `precedes` clause declared inside an event block: this event precedes
/// the named one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrecedenceDecl {
    pub to: String,
    pub loopback: bool,
    pub guard: Option<String>,
    pub pos: Pos,
}

/// A precedence edge of the whole model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrecedenceEdge {
    pub from: String,
    pub to: String,
    pub loopback: bool,
    pub guard: Option<String>,
    pub pos: Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CardMax {
    One,
    Many,
}

impl CardMax {
    pub fn as_str(self) -> &'static str {
        match self {
            CardMax::One => "1",
            CardMax::Many => "M",
        }
    }
}

/// One side of a cardinality annotation: object name plus min/max.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CardSide {
    pub object: String,
    pub min: u8,
    pub max: CardMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeclaredKind {
    Constant,
    Variable,
}

/// Data-type names an annotation may select for an attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeName {
    Autonumeric,
    Nat,
    Int,
    Real,
    String,
    Text,
    Date,
    Time,
    DateTime,
    Bool,
}

impl TypeName {
    pub fn as_str(self) -> &'static str {
        match self {
            TypeName::Autonumeric => "autonumeric",
            TypeName::Nat => "nat",
            TypeName::Int => "int",
            TypeName::Real => "real",
            TypeName::String => "string",
            TypeName::Text => "text",
            TypeName::Date => "date",
            TypeName::Time => "time",
            TypeName::DateTime => "datetime",
            TypeName::Bool => "bool",
        }
    }

    pub fn from_str(s: &str) -> Option<Self> {
        Some(match s {
            "autonumeric" => TypeName::Autonumeric,
            "nat" => TypeName::Nat,
            "int" => TypeName::Int,
            "real" => TypeName::Real,
            "string" => TypeName::String,
            "text" => TypeName::Text,
            "date" => TypeName::Date,
            "time" => TypeName::Time,
            "datetime" => TypeName::DateTime,
            "bool" => TypeName::Bool,
            _ => return None,
        })
    }
}

/// Structured restriction annotations attached to an event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RestrictionKind {
    /// `identified-by Object (Field, ...)`
    IdentifiedBy { object: String, fields: Vec<String> },
    /// `cardinality A min:max [dynamic] -- min:max B`
    Cardinality { a: CardSide, dynamic: bool, b: CardSide },
    /// `size SUB.Field = N`
    Size { substructure: String, field: String, size: u32 },
    /// `nulls SUB.Field = yes|no`
    Nulls { substructure: String, field: String, allowed: bool },
    /// `kind SUB.Field = constant|variable`
    AttributeKind { substructure: String, field: String, kind: DeclaredKind },
    /// `type SUB.Field = <data type>`
    TypeOverride { substructure: String, field: String, data_type: TypeName },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Restriction {
    pub kind: RestrictionKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunicativeEvent {
    pub id: String,
    pub title: String,
    pub process: String,
    pub primary_actor: String,
    pub support_actor: String,
    pub message: MessageStructure,
    pub restrictions: Vec<Restriction>,
    pub reaction: ReactionSpec,
    pub precedes: Vec<PrecedenceDecl>,
    pub pos: Pos,
}

impl CommunicativeEvent {
    /// Restrictions of a given shape, in declaration order.
    pub fn identified_by(&self, object: &str) -> Option<&[String]> {
        self.restrictions.iter().find_map(|r| match &r.kind {
            RestrictionKind::IdentifiedBy { object: o, fields } if o == object => {
                Some(fields.as_slice())
            }
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RequirementsModel {
    pub processes: Vec<BusinessProcess>,
    pub events: Vec<CommunicativeEvent>,
    pub objects: ObjectRegistry,
}

impl RequirementsModel {
    pub fn event(&self, id: &str) -> Option<&CommunicativeEvent> {
        self.events.iter().find(|e| e.id.eq_ignore_ascii_case(id))
    }

    pub fn process(&self, acronym: &str) -> Option<&BusinessProcess> {
        self.processes.iter().find(|p| p.acronym == acronym)
    }

    /// All precedence edges of the model, assembled from the per-event
    /// `precedes` clauses.
    pub fn precedences(&self) -> Vec<PrecedenceEdge> {
        self.events
            .iter()
            .flat_map(|e| {
                e.precedes.iter().map(|d| PrecedenceEdge {
                    from: e.id.clone(),
                    to: d.to.clone(),
                    loopback: d.loopback,
                    guard: d.guard.clone(),
                    pos: d.pos,
                })
            })
            .collect()
    }

    /// Structural equality modulo declaration order and source positions,
    /// checked through the canonical print.
    pub fn structurally_equals(&self, other: &RequirementsModel) -> bool {
        print_canonical(self) == print_canonical(other)
    }
}
