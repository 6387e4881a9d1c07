//! The derivation trace: one record per derivation decision, linking every
//! produced model element back to the requirements element it came from.

use std::fmt;

/// Closed catalogue of derivation rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleId {
    /// Class derived from a registered aggregation substructure.
    Class,
    /// Attribute derived from a data field of a creation event.
    Attr,
    /// Relationship derived from an iteration substructure.
    IterRel,
    /// Relationship derived from a reference field.
    RefRel,
    /// Attribute added by a class extension.
    ExtAttr,
    /// Creation service.
    CreSvc,
    /// End-of-editing service.
    Eoe,
    /// Attribute-setting service.
    Setter,
    /// Shared insertion/deletion service pair.
    Shared,
    /// Transaction.
    Txn,
    /// Creation-service revision.
    Revise,
    /// State-transition diagram.
    Std,
    /// A derivation default was applied (carries the decision id).
    Default,
}

impl RuleId {
    pub fn code(self) -> &'static str {
        match self {
            RuleId::Class => "R-CLASS",
            RuleId::Attr => "R-ATTR",
            RuleId::IterRel => "R-ITER-REL",
            RuleId::RefRel => "R-REF-REL",
            RuleId::ExtAttr => "R-EXT-ATTR",
            RuleId::CreSvc => "R-CRESVC",
            RuleId::Eoe => "R-EOE",
            RuleId::Setter => "R-SETTER",
            RuleId::Shared => "R-SHARED",
            RuleId::Txn => "R-TXN",
            RuleId::Revise => "R-REVISE",
            RuleId::Std => "R-STD",
            RuleId::Default => "R-DEFAULT",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Class,
    Attribute,
    Relationship,
    Service,
    Transaction,
    Diagram,
}

impl ElementKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::Class => "class",
            ElementKind::Attribute => "attribute",
            ElementKind::Relationship => "relationship",
            ElementKind::Service => "service",
            ElementKind::Transaction => "transaction",
            ElementKind::Diagram => "diagram",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub rule: RuleId,
    /// Event whose processing produced the element ("-" for post passes).
    pub event: String,
    /// Path of the source requirements element.
    pub source: String,
    pub element_kind: ElementKind,
    /// Path of the produced element, e.g. `ClientOrder.new_order`.
    pub element: String,
    pub note: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DerivationTrace {
    pub records: Vec<TraceRecord>,
}

impl DerivationTrace {
    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn records_for_rule(&self, rule: RuleId) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(move |r| r.rule == rule)
    }

    /// Events that created a class or contributed attributes to it, in trace
    /// order without duplicates. This is the affecting-event list used by
    /// state-transition derivation.
    pub fn attribute_affecting_events(&self, class: &str) -> Vec<String> {
        let prefix = format!("{class}.");
        let mut out: Vec<String> = Vec::new();
        for r in &self.records {
            let hits = match r.rule {
                RuleId::Class => r.element == class,
                RuleId::Attr | RuleId::ExtAttr => r.element.starts_with(&prefix),
                _ => false,
            };
            if hits && !out.contains(&r.event) {
                out.push(r.event.clone());
            }
        }
        out
    }
}
