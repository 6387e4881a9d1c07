//! Message structures: the trees of aggregations, iterations and fields that
//! describe the message conveyed by a communicative event.
//!
//! Everything object-model derivation does is driven by these trees, so this
//! module also carries the business-object registry (which binds object names
//! to aggregation substructures) and reference resolution.

use std::collections::BTreeMap;

use crate::diag::{codes, Diagnostic, Pos};

// ---------------------------------------------------------------------------
// Tree types
// ---------------------------------------------------------------------------

/// Field operation tag: who produces the value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpTag {
    /// `g`: generated by the information system.
    Generated,
    /// `i`: indicated by the primary actor.
    Indicated,
}

impl OpTag {
    pub fn as_str(self) -> &'static str {
        match self {
            OpTag::Generated => "g",
            OpTag::Indicated => "i",
        }
    }
}

/// Field domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    Number,
    Text,
    Date,
    DateTime,
    Money,
    /// Closed set of literals, e.g. `enum(accepted|rejected)`.
    Enum(Vec<String>),
    /// Reference to a registered business object.
    Ref(String),
}

impl Domain {
    pub fn is_ref(&self) -> bool {
        matches!(self, Domain::Ref(_))
    }
}

/// A data or reference field of a message structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    pub name: String,
    pub op: OpTag,
    pub domain: Domain,
    /// Inline size, e.g. `text(120)`.
    pub size: Option<u32>,
    /// Marks the business object an extension event modifies.
    pub affected: bool,
    /// Initialisation expression, copied through as the attribute default.
    pub init: Option<String>,
    pub pos: Pos,
}

/// One item of an aggregation: either a field or a nested substructure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Field(Field),
    Sub(Substructure),
}

/// `NAME = < a + b + ... >`. Iteration bodies may be anonymous (empty name).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aggregation {
    pub name: String,
    pub items: Vec<Item>,
    pub pos: Pos,
}

/// `NAME = { <body> }`; the body is always a single aggregation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Iteration {
    pub name: String,
    pub body: Aggregation,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Substructure {
    Aggregation(Aggregation),
    Iteration(Iteration),
}

impl Substructure {
    pub fn name(&self) -> &str {
        match self {
            Substructure::Aggregation(a) => &a.name,
            Substructure::Iteration(i) => &i.name,
        }
    }
}

/// A complete message structure. The root is an aggregation by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageStructure {
    pub root: Aggregation,
}

impl Aggregation {
    /// Fields that are direct items of this aggregation, in document order.
    pub fn fields(&self) -> impl Iterator<Item = &Field> {
        self.items.iter().filter_map(|i| match i {
            Item::Field(f) => Some(f),
            Item::Sub(_) => None,
        })
    }

    /// Data (non-reference) fields that are direct items, in document order.
    pub fn data_fields(&self) -> impl Iterator<Item = &Field> {
        self.fields().filter(|f| !f.domain.is_ref())
    }

    /// Reference fields that are direct items, in document order.
    pub fn ref_fields(&self) -> impl Iterator<Item = &Field> {
        self.fields().filter(|f| f.domain.is_ref())
    }

    /// Nested iterations that are direct items, in document order.
    pub fn iterations(&self) -> impl Iterator<Item = &Iteration> {
        self.items.iter().filter_map(|i| match i {
            Item::Sub(Substructure::Iteration(it)) => Some(it),
            _ => None,
        })
    }

    /// Nested aggregations that are direct items, in document order.
    pub fn aggregations(&self) -> impl Iterator<Item = &Aggregation> {
        self.items.iter().filter_map(|i| match i {
            Item::Sub(Substructure::Aggregation(a)) => Some(a),
            _ => None,
        })
    }
}

impl MessageStructure {
    /// Every field in the tree, pre-order.
    pub fn all_fields(&self) -> Vec<&Field> {
        let mut out = Vec::new();
        collect_fields(&self.root, &mut out);
        out
    }

    /// True when the message carries no fields at all.
    pub fn is_empty(&self) -> bool {
        self.all_fields().is_empty()
    }

    /// Looks up a substructure (aggregation or iteration) by name anywhere in
    /// the tree. Iteration lookups expose the body aggregation, so annotations
    /// can address fields inside `NAME = { < ... > }` via the iteration name.
    pub fn substructure_fields(&self, name: &str) -> Option<Vec<&Field>> {
        fn walk<'a>(agg: &'a Aggregation, name: &str) -> Option<Vec<&'a Field>> {
            if agg.name == name {
                return Some(agg.fields().collect());
            }
            for item in &agg.items {
                if let Item::Sub(sub) = item {
                    match sub {
                        Substructure::Aggregation(a) => {
                            if let Some(hit) = walk(a, name) {
                                return Some(hit);
                            }
                        }
                        Substructure::Iteration(it) => {
                            if it.name == name {
                                return Some(it.body.fields().collect());
                            }
                            if let Some(hit) = walk(&it.body, name) {
                                return Some(hit);
                            }
                        }
                    }
                }
            }
            None
        }
        walk(&self.root, name)
    }
}

fn collect_fields<'a>(agg: &'a Aggregation, out: &mut Vec<&'a Field>) {
    for item in &agg.items {
        match item {
            Item::Field(f) => out.push(f),
            Item::Sub(Substructure::Aggregation(a)) => collect_fields(a, out),
            Item::Sub(Substructure::Iteration(it)) => collect_fields(&it.body, out),
        }
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Parse a standalone message structure, `NAME = < ... >`.
pub fn parse_message_structure(text: &str) -> Result<MessageStructure, Vec<Diagnostic>> {
    crate::requirements::parser::parse_message_only(text)
}

/// Pre-order list of the aggregation substructures of a message. The first
/// element is always the root.
pub fn aggregations_in_document_order(ms: &MessageStructure) -> Vec<&Aggregation> {
    let mut out = Vec::new();
    fn walk<'a>(agg: &'a Aggregation, out: &mut Vec<&'a Aggregation>) {
        out.push(agg);
        for item in &agg.items {
            match item {
                Item::Sub(Substructure::Aggregation(a)) => walk(a, out),
                Item::Sub(Substructure::Iteration(it)) => walk(&it.body, out),
                Item::Field(_) => {}
            }
        }
    }
    walk(&ms.root, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Business-object registry and reference resolution
// ---------------------------------------------------------------------------

/// Where a business object is registered: the owning event and the path of
/// substructure names from the message root to the aggregation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryEntry {
    pub event: String,
    pub path: Vec<String>,
    pub pos: Pos,
}

/// Registry mapping business-object names to the aggregation substructures
/// that carry their data.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObjectRegistry {
    entries: BTreeMap<String, RegistryEntry>,
}

impl ObjectRegistry {
    pub fn insert(&mut self, name: String, entry: RegistryEntry) -> Option<RegistryEntry> {
        self.entries.insert(name, entry)
    }

    pub fn get(&self, name: &str) -> Option<&RegistryEntry> {
        self.entries.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &RegistryEntry)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One resolved reference field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedRef {
    /// Names of the substructures containing the field, root first.
    pub path: Vec<String>,
    pub field_name: String,
    pub object: String,
    pub target: RegistryEntry,
    pub affected: bool,
}

/// A message structure with every `ref` domain bound to its registry entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedMessageStructure {
    pub bindings: Vec<ResolvedRef>,
}

/// Bind every reference field of `ms` to the registry. Unresolved references
/// are reported as error diagnostics; resolution continues past them.
pub fn resolve_references(
    ms: &MessageStructure,
    registry: &ObjectRegistry,
) -> Result<ResolvedMessageStructure, Vec<Diagnostic>> {
    let mut bindings = Vec::new();
    let mut diags = Vec::new();
    let mut path = Vec::new();

    fn walk(
        agg: &Aggregation,
        path: &mut Vec<String>,
        registry: &ObjectRegistry,
        bindings: &mut Vec<ResolvedRef>,
        diags: &mut Vec<Diagnostic>,
    ) {
        path.push(agg.name.clone());
        for item in &agg.items {
            match item {
                Item::Field(f) => {
                    if let Domain::Ref(object) = &f.domain {
                        match registry.get(object) {
                            Some(entry) => bindings.push(ResolvedRef {
                                path: path.clone(),
                                field_name: f.name.clone(),
                                object: object.clone(),
                                target: entry.clone(),
                                affected: f.affected,
                            }),
                            None => diags.push(Diagnostic::error(
                                f.pos,
                                codes::UNRESOLVED_OBJECT,
                                format!(
                                    "field {} references unregistered business object {object}",
                                    f.name
                                ),
                            )),
                        }
                    }
                }
                Item::Sub(Substructure::Aggregation(a)) => {
                    walk(a, path, registry, bindings, diags)
                }
                Item::Sub(Substructure::Iteration(it)) => {
                    path.push(it.name.clone());
                    walk(&it.body, path, registry, bindings, diags);
                    path.pop();
                }
            }
        }
        path.pop();
    }

    walk(&ms.root, &mut path, registry, &mut bindings, &mut diags);
    if diags.is_empty() {
        Ok(ResolvedMessageStructure { bindings })
    } else {
        Err(diags)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sale1_order() -> MessageStructure {
        parse_message_structure(
            "ORDER = <\n  Order number [g number] +\n  Request date [i date] +\n  Payment type [i text(30)] +\n  Client [i ref Client] +\n  DESTINATIONS = { DESTINATION = <\n    Address [i ref ClientAddress] +\n    Person in charge [i text] +\n    LINES = { LINE = <\n      Product [i ref Product] +\n      Price [i money] +\n      Quantity [i number]\n    > }\n  > }\n>",
        )
        .expect("valid structure")
    }

    #[test]
    fn sale1_tree_shape() {
        let ms = sale1_order();
        assert_eq!(ms.root.name, "ORDER");
        assert_eq!(ms.root.fields().count(), 4);
        let dest_iter = ms.root.iterations().next().unwrap();
        assert_eq!(dest_iter.name, "DESTINATIONS");
        assert_eq!(dest_iter.body.name, "DESTINATION");
        assert_eq!(dest_iter.body.fields().count(), 2);
        let lines = dest_iter.body.iterations().next().unwrap();
        assert_eq!(lines.name, "LINES");
        assert_eq!(lines.body.name, "LINE");
        assert_eq!(lines.body.fields().count(), 3);
    }

    #[test]
    fn document_order_is_preorder() {
        let ms = sale1_order();
        let aggs: Vec<&str> = aggregations_in_document_order(&ms)
            .iter()
            .map(|a| a.name.as_str())
            .collect();
        assert_eq!(aggs, ["ORDER", "DESTINATION", "LINE"]);
    }

    #[test]
    fn minimal_aggregation() {
        let ms = parse_message_structure("A = < X [i number] >").unwrap();
        assert_eq!(ms.root.fields().count(), 1);
        assert_eq!(aggregations_in_document_order(&ms).len(), 1);
    }

    #[test]
    fn iteration_body_must_be_aggregation() {
        let err = parse_message_structure("A = < B = { C [i number] } >").unwrap_err();
        assert!(err.iter().any(|d| d.code == codes::ITERATION_BODY),
            "expected iteration-body diagnostic, got {err:?}");
    }

    #[test]
    fn unresolved_ref_reported() {
        let ms = parse_message_structure("A = < X [i ref Foo] >").unwrap();
        let registry = ObjectRegistry::default();
        let err = resolve_references(&ms, &registry).unwrap_err();
        assert_eq!(err.len(), 1);
        assert_eq!(err[0].code, codes::UNRESOLVED_OBJECT);
        assert!(err[0].message.contains("Foo"));
    }

    #[test]
    fn resolve_binds_paths() {
        let ms = sale1_order();
        let mut registry = ObjectRegistry::default();
        for name in ["Client", "ClientAddress", "Product"] {
            registry.insert(
                name.to_string(),
                RegistryEntry { event: "X".into(), path: vec!["R".into()], pos: Pos::default() },
            );
        }
        let resolved = resolve_references(&ms, &registry).unwrap();
        assert_eq!(resolved.bindings.len(), 3);
        let addr = &resolved.bindings[1];
        assert_eq!(addr.object, "ClientAddress");
        assert_eq!(addr.path, vec!["ORDER", "DESTINATIONS", "DESTINATION"]);
    }
}
