//! Per-event derivation of class-diagram views and their incremental
//! integration into the conceptual model.
//!
//! Events are processed one by one in a linear extension of the precedence
//! order. Each event yields a class diagram view (new classes, extensions to
//! existing classes, relationships, services); the view is integrated into
//! the model under construction. A final pass revises creation services.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::message::{
    aggregations_in_document_order, Aggregation, Domain, Field, MessageStructure, OpTag,
};
use crate::model::{
    ArgType, Argument, Attribute, AttributeKind, Class, ConceptualModel, DataType, Provenance,
    RelOrigin, RelationshipSide, Service, StructuralRelationship, DEFAULT_STRING_SIZE,
};
use crate::names::{attribute_name, camel_to_snake, lower_compact, pluralize, surrogate_id_name};
use crate::ordering::induced_poset;
use crate::requirements::{
    CardMax, CardSide, CommunicativeEvent, DeclaredKind, ReactionKind, RequirementsModel,
    RestrictionKind, TypeName,
};
use crate::services;
use crate::trace::{ElementKind, RuleId, TraceRecord};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DeriveError {
    #[error("event {event}: message references {object}, whose class has not been derived yet")]
    ForwardReference { event: String, object: String },
    #[error("event {event}: class {class} already exists")]
    DuplicateClass { event: String, class: String },
    #[error("event {event}: attribute {class}.{attribute} already exists")]
    AttributeCollision { event: String, class: String, attribute: String },
    #[error("event {event}: service {class}.{service} already exists")]
    ServiceCollision { event: String, class: String, service: String },
    #[error("event {event}: empty message")]
    EmptyView { event: String },
    #[error("event {event}: aggregation {aggregation} is not registered as a business object")]
    UnregisteredAggregation { event: String, aggregation: String },
    #[error("event {event}: generated field {field} must have the number domain")]
    GeneratedOnNonNumber { event: String, field: String },
    #[error("event {event}: extension must mark exactly one affected reference field")]
    AffectedCount { event: String },
    #[error("conflicting cardinality annotation for {a} -- {b}")]
    ConflictingCardinality { a: String, b: String },
    #[error("unknown event {0} in the processing order")]
    UnknownEvent(String),
    #[error("class {0} not found in the model")]
    UnknownClass(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MapDomainError {
    #[error("generated fields must have the number domain")]
    GeneratedOnNonNumber,
    #[error("reference fields do not map to attribute data types")]
    ReferenceField,
}

/// Map a field domain and op tag to an attribute data type.
///
/// Text maps to a string of the default size; the caller replaces the size
/// when the field or an annotation declares one. Enum domains map to a string
/// sized to the longest literal.
pub fn map_domain(domain: &Domain, op: OpTag) -> Result<DataType, MapDomainError> {
    if op == OpTag::Generated {
        return match domain {
            Domain::Number => Ok(DataType::Autonumeric),
            _ => Err(MapDomainError::GeneratedOnNonNumber),
        };
    }
    match domain {
        Domain::Number => Ok(DataType::Real),
        Domain::Text => Ok(DataType::String(DEFAULT_STRING_SIZE)),
        Domain::Date => Ok(DataType::Date),
        Domain::DateTime => Ok(DataType::DateTime),
        Domain::Money => Ok(DataType::Real),
        Domain::Enum(lits) => {
            let longest = lits.iter().map(|l| l.len() as u32).max().unwrap_or(1).max(1);
            Ok(DataType::String(longest))
        }
        Domain::Ref(_) => Err(MapDomainError::ReferenceField),
    }
}

/// Normalized initialisation expression: the builtin date expression is
/// canonicalized to `systemDate()`, everything else passes through opaque.
pub fn normalize_init(init: &str) -> String {
    let trimmed = init.trim();
    if trimmed == "today()" || trimmed == "systemDate()" {
        "systemDate()".to_string()
    } else {
        trimmed.to_string()
    }
}

// ---------------------------------------------------------------------------
// View type
// ---------------------------------------------------------------------------

/// Attribute and service additions to a class that already exists.
#[derive(Debug, Clone, Default)]
pub struct ClassExtension {
    pub class: String,
    pub attributes: Vec<Attribute>,
    pub services: Vec<Service>,
}

/// The portion of the class diagram derived from one communicative event.
#[derive(Debug, Clone, Default)]
pub struct ClassDiagramView {
    pub event: String,
    pub new_classes: Vec<Class>,
    pub extensions: Vec<ClassExtension>,
    pub relationships: Vec<StructuralRelationship>,
    pub transactions: Vec<(String, crate::model::Transaction)>,
    pub trace: Vec<TraceRecord>,
}

impl ClassDiagramView {
    pub fn class_names(&self) -> Vec<&str> {
        self.new_classes.iter().map(|c| c.name.as_str()).collect()
    }

    fn extension_for(&mut self, class: &str) -> &mut ClassExtension {
        if let Some(i) = self.extensions.iter().position(|e| e.class == class) {
            &mut self.extensions[i]
        } else {
            self.extensions.push(ClassExtension { class: class.to_string(), ..Default::default() });
            self.extensions.last_mut().expect("just pushed")
        }
    }
}

// ---------------------------------------------------------------------------
// Derivation context
// ---------------------------------------------------------------------------

/// Per-field annotation overrides, resolved once per event.
#[derive(Debug, Clone, Copy, Default)]
struct FieldOverrides {
    size: Option<u32>,
    nulls: Option<bool>,
    kind: Option<DeclaredKind>,
    type_override: Option<TypeName>,
}

/// Cardinality annotation, keyed by the unordered object pair.
#[derive(Debug, Clone)]
struct CardAnnotation {
    a: CardSide,
    b: CardSide,
    dynamic: bool,
}

impl CardAnnotation {
    /// Sides oriented so the first result matches `object_a`.
    fn oriented(&self, object_a: &str) -> Option<(&CardSide, &CardSide)> {
        if self.a.object == object_a {
            Some((&self.a, &self.b))
        } else if self.b.object == object_a {
            Some((&self.b, &self.a))
        } else {
            None
        }
    }
}

pub(crate) struct DeriveContext<'a> {
    pub model: &'a RequirementsModel,
    /// Canonical rank of each event, independent of the fold order.
    pub rank: BTreeMap<String, u32>,
    /// Events that are the target of a loopback edge.
    pub loopback_targets: Vec<String>,
    card_annotations: BTreeMap<(String, String), CardAnnotation>,
    pub out: ConceptualModel,
    seq: u32,
}

impl<'a> DeriveContext<'a> {
    pub fn next_seq(&mut self) -> u32 {
        let s = self.seq;
        self.seq += 1;
        s
    }

    pub fn provenance(&mut self, event: &str) -> Provenance {
        Provenance { event: event.to_string(), seq: self.next_seq(), revision: false }
    }

    fn annotation_for(&self, obj_a: &str, obj_b: &str) -> Option<&CardAnnotation> {
        let mut key = [obj_a.to_string(), obj_b.to_string()];
        key.sort();
        self.card_annotations.get(&(key[0].clone(), key[1].clone()))
    }
}

/// Derive the conceptual model by folding the events in the given order.
///
/// `order` must be a linear extension of the precedence order; member
/// ordering in the result is normalized against the canonical order of the
/// same event set, so every valid `order` yields the same canonical model.
pub fn derive(
    model: &RequirementsModel,
    order: &[String],
) -> Result<ConceptualModel, DeriveError> {
    for id in order {
        if model.event(id).is_none() {
            return Err(DeriveError::UnknownEvent(id.clone()));
        }
    }

    let poset = induced_poset(model, order);
    let canonical = crate::ordering::topological_order(&poset);
    let rank: BTreeMap<String, u32> =
        canonical.iter().enumerate().map(|(i, id)| (id.clone(), i as u32)).collect();
    let loopback_targets: Vec<String> =
        poset.removed.iter().map(|e| e.to.clone()).collect();

    let mut card_annotations = BTreeMap::new();
    for event in &model.events {
        for r in &event.restrictions {
            if let RestrictionKind::Cardinality { a, dynamic, b } = &r.kind {
                let mut key = [a.object.clone(), b.object.clone()];
                key.sort();
                card_annotations.insert(
                    (key[0].clone(), key[1].clone()),
                    CardAnnotation { a: a.clone(), b: b.clone(), dynamic: *dynamic },
                );
            }
        }
    }

    let mut ctx = DeriveContext {
        model,
        rank,
        loopback_targets,
        card_annotations,
        out: ConceptualModel::default(),
        seq: 0,
    };

    for id in order {
        let event = model.event(id).expect("checked above");
        ctx.seq = 0;
        let view = derive_view(event, &mut ctx)?;
        integrate_view(&mut ctx, view)?;
    }

    services::revise_creation_services(&mut ctx.out, &ctx.rank);
    normalize(&mut ctx.out, &ctx.rank);
    Ok(ctx.out)
}

/// Dispatch on the reaction kind of the event.
pub(crate) fn derive_view(
    event: &CommunicativeEvent,
    ctx: &mut DeriveContext<'_>,
) -> Result<ClassDiagramView, DeriveError> {
    if event.message.is_empty() {
        return Err(DeriveError::EmptyView { event: event.id.clone() });
    }
    match event.reaction.kind {
        ReactionKind::Creation => derive_creation_view(event, ctx),
        ReactionKind::Extension => derive_extension_view(event, ctx),
    }
}

// ---------------------------------------------------------------------------
// Attribute construction
// ---------------------------------------------------------------------------

fn field_overrides(event: &CommunicativeEvent) -> BTreeMap<usize, FieldOverrides> {
    let mut map: BTreeMap<usize, FieldOverrides> = BTreeMap::new();
    let mut entry = |msg: &MessageStructure, sub: &str, field: &str| -> Option<usize> {
        msg.substructure_fields(sub)?
            .into_iter()
            .find(|f| f.name == field)
            .map(|f| f as *const Field as usize)
    };
    for r in &event.restrictions {
        match &r.kind {
            RestrictionKind::Size { substructure, field, size } => {
                if let Some(key) = entry(&event.message, substructure, field) {
                    map.entry(key).or_default().size = Some(*size);
                }
            }
            RestrictionKind::Nulls { substructure, field, allowed } => {
                if let Some(key) = entry(&event.message, substructure, field) {
                    map.entry(key).or_default().nulls = Some(*allowed);
                }
            }
            RestrictionKind::AttributeKind { substructure, field, kind } => {
                if let Some(key) = entry(&event.message, substructure, field) {
                    map.entry(key).or_default().kind = Some(*kind);
                }
            }
            RestrictionKind::TypeOverride { substructure, field, data_type } => {
                if let Some(key) = entry(&event.message, substructure, field) {
                    map.entry(key).or_default().type_override = Some(*data_type);
                }
            }
            _ => {}
        }
    }
    map
}

struct AttrOutcome {
    attribute: Attribute,
    used_default_size: bool,
}

#[allow(clippy::too_many_arguments)]
fn build_attribute(
    field: &Field,
    overrides: &BTreeMap<usize, FieldOverrides>,
    is_id: bool,
    extension: bool,
    event: &str,
    provenance: Provenance,
) -> Result<AttrOutcome, DeriveError> {
    let ov = overrides
        .get(&(field as *const Field as usize))
        .copied()
        .unwrap_or_default();

    let base = map_domain(&field.domain, field.op).map_err(|_| {
        DeriveError::GeneratedOnNonNumber { event: event.to_string(), field: field.name.clone() }
    })?;

    let mut used_default_size = false;
    let data_type = match ov.type_override {
        None => match base {
            DataType::String(_) if field.domain == Domain::Text => {
                let size = match field.size.or(ov.size) {
                    Some(s) => s,
                    None => {
                        used_default_size = true;
                        DEFAULT_STRING_SIZE
                    }
                };
                DataType::String(size.max(1))
            }
            other => other,
        },
        Some(t) => match t {
            TypeName::Autonumeric => DataType::Autonumeric,
            TypeName::Nat => DataType::Nat,
            TypeName::Int => DataType::Int,
            TypeName::Real => DataType::Real,
            TypeName::Text => DataType::Text,
            TypeName::Date => DataType::Date,
            TypeName::Time => DataType::Time,
            TypeName::DateTime => DataType::DateTime,
            TypeName::Bool => DataType::Bool,
            TypeName::String => {
                let size = match field.size.or(ov.size) {
                    Some(s) => s,
                    None => match base {
                        // Enum literals already determine a size.
                        DataType::String(s) if !matches!(field.domain, Domain::Text) => s,
                        _ => {
                            used_default_size = true;
                            DEFAULT_STRING_SIZE
                        }
                    },
                };
                DataType::String(size.max(1))
            }
        },
    };

    let default_value = field.init.as_deref().map(normalize_init);
    let kind = if extension {
        AttributeKind::Variable
    } else {
        match ov.kind {
            Some(DeclaredKind::Constant) => AttributeKind::Constant,
            Some(DeclaredKind::Variable) => AttributeKind::Variable,
            None => {
                if is_id || default_value.is_some() {
                    AttributeKind::Constant
                } else {
                    AttributeKind::Variable
                }
            }
        }
    };
    let nulls_allowed = if extension {
        true
    } else if is_id {
        false
    } else {
        ov.nulls.unwrap_or(true)
    };

    let enum_literals = match &field.domain {
        Domain::Enum(lits) => Some(lits.clone()),
        _ => None,
    };

    Ok(AttrOutcome {
        attribute: Attribute {
            name: attribute_name(&field.name),
            is_id: is_id && !extension,
            kind,
            data_type,
            requested_on_creation: !extension,
            nulls_allowed,
            default_value,
            enum_literals,
            provenance,
        },
        used_default_size,
    })
}

// ---------------------------------------------------------------------------
// Class derivation
// ---------------------------------------------------------------------------

/// Derive a class from a registered aggregation of a creation event.
pub(crate) fn derive_class_from_aggregation(
    agg: &Aggregation,
    class_name: &str,
    event: &CommunicativeEvent,
    ctx: &mut DeriveContext<'_>,
    view: &mut ClassDiagramView,
) -> Result<Class, DeriveError> {
    let overrides = field_overrides(event);
    let id_fields: Vec<String> = event
        .identified_by(class_name)
        .map(|fs| fs.to_vec())
        .unwrap_or_default();

    let mut attributes = Vec::new();

    if id_fields.is_empty() {
        // No declared identifier: prepend a generated surrogate.
        let name = surrogate_id_name(class_name);
        let provenance = ctx.provenance(&event.id);
        attributes.push(Attribute {
            name: name.clone(),
            is_id: true,
            kind: AttributeKind::Constant,
            data_type: DataType::Autonumeric,
            requested_on_creation: true,
            nulls_allowed: false,
            default_value: None,
            enum_literals: None,
            provenance,
        });
        view.trace.push(TraceRecord {
            rule: RuleId::Default,
            event: event.id.clone(),
            source: format!("{}.{}", event.id, agg.name),
            element_kind: ElementKind::Attribute,
            element: format!("{class_name}.{name}"),
            note: "D3: no identifier declared; surrogate id generated".to_string(),
        });
        view.trace.push(TraceRecord {
            rule: RuleId::Attr,
            event: event.id.clone(),
            source: format!("{}.{}", event.id, agg.name),
            element_kind: ElementKind::Attribute,
            element: format!("{class_name}.{name}"),
            note: "surrogate identifier".to_string(),
        });
    }

    for field in agg.data_fields() {
        let is_id = id_fields.iter().any(|f| f == &field.name);
        let provenance = ctx.provenance(&event.id);
        let outcome =
            build_attribute(field, &overrides, is_id, false, &event.id, provenance)?;
        view.trace.push(TraceRecord {
            rule: RuleId::Attr,
            event: event.id.clone(),
            source: format!("{}.{}", agg.name, field.name),
            element_kind: ElementKind::Attribute,
            element: format!("{class_name}.{}", outcome.attribute.name),
            note: String::new(),
        });
        if outcome.used_default_size {
            view.trace.push(TraceRecord {
                rule: RuleId::Default,
                event: event.id.clone(),
                source: format!("{}.{}", agg.name, field.name),
                element_kind: ElementKind::Attribute,
                element: format!("{class_name}.{}", outcome.attribute.name),
                note: format!("D14: default string size {DEFAULT_STRING_SIZE} applied"),
            });
        }
        attributes.push(outcome.attribute);
    }

    let provenance = ctx.provenance(&event.id);
    let class = Class {
        name: class_name.to_string(),
        attributes,
        services: Vec::new(),
        transactions: Vec::new(),
        provenance,
    };
    view.trace.push(TraceRecord {
        rule: RuleId::Class,
        event: event.id.clone(),
        source: agg.name.clone(),
        element_kind: ElementKind::Class,
        element: class_name.to_string(),
        note: "registered business object".to_string(),
    });
    Ok(class)
}

// ---------------------------------------------------------------------------
// Relationship derivation
// ---------------------------------------------------------------------------

/// Relationship and role naming rules. `side_a` is the referenced or parent
/// class; when derived from a reference field, the referenced-side role is
/// the field name.
pub(crate) fn name_relationship_and_roles(
    mut rel: StructuralRelationship,
    ref_field_name: Option<&str>,
) -> StructuralRelationship {
    rel.name = format!(
        "{}_{}",
        camel_to_snake(&rel.side_a.class),
        camel_to_snake(&rel.side_b.class)
    );
    rel.side_a.role = match ref_field_name {
        Some(field) => attribute_name(field),
        None => lower_compact(&rel.side_a.class),
    };
    if rel.side_a.max == CardMax::Many {
        rel.side_a.role = pluralize(&rel.side_a.role);
    }
    rel.side_b.role = lower_compact(&rel.side_b.class);
    if rel.side_b.max == CardMax::Many {
        rel.side_b.role = pluralize(&rel.side_b.role);
    }
    rel
}

/// Containment relationship from an iteration substructure: max M on the
/// nested (child) side, max 1 on the parent side; mins default to parent 1,
/// child 0 unless annotated.
pub(crate) fn derive_relationship_from_iteration(
    parent_class: &str,
    child_class: &str,
    event: &CommunicativeEvent,
    ctx: &mut DeriveContext<'_>,
) -> Result<(StructuralRelationship, bool), DeriveError> {
    let annotation = ctx.annotation_for(parent_class, child_class).cloned();
    let mut parent_min = 1;
    let mut child_min = 0;
    let mut dynamic = false;
    let mut annotated = false;
    if let Some(ann) = &annotation {
        if let Some((p, c)) = ann.oriented(parent_class) {
            if p.max == CardMax::Many || c.max == CardMax::One {
                return Err(DeriveError::ConflictingCardinality {
                    a: parent_class.to_string(),
                    b: child_class.to_string(),
                });
            }
            parent_min = p.min;
            child_min = c.min;
            dynamic = ann.dynamic;
            annotated = true;
        }
    }

    let provenance = ctx.provenance(&event.id);
    let rel = StructuralRelationship {
        name: String::new(),
        side_a: RelationshipSide {
            class: parent_class.to_string(),
            role: String::new(),
            min: parent_min,
            max: CardMax::One,
        },
        side_b: RelationshipSide {
            class: child_class.to_string(),
            role: String::new(),
            min: child_min,
            max: CardMax::Many,
        },
        dynamic,
        origin: RelOrigin::Iteration,
        provenance,
    };
    Ok((name_relationship_and_roles(rel, None), annotated))
}

/// Relationship from a reference field: max 1 on the referenced side. In a
/// creation event the link is static with referenced-side min defaulting to
/// 1; in an extension it is dynamic with 0:1 on the referenced side.
pub(crate) fn derive_relationship_from_reference(
    ref_field: &Field,
    owning_class: &str,
    referenced_class: &str,
    creation: bool,
    event: &CommunicativeEvent,
    ctx: &mut DeriveContext<'_>,
) -> Result<(StructuralRelationship, bool), DeriveError> {
    let annotation = ctx.annotation_for(referenced_class, owning_class).cloned();
    let mut referenced_min: u8 = if creation { 1 } else { 0 };
    let mut owner_min: u8 = 0;
    let mut owner_max = CardMax::Many;
    let mut dynamic = !creation;
    let mut annotated = false;
    if let Some(ann) = &annotation {
        if let Some((r, o)) = ann.oriented(referenced_class) {
            if r.max == CardMax::Many {
                return Err(DeriveError::ConflictingCardinality {
                    a: referenced_class.to_string(),
                    b: owning_class.to_string(),
                });
            }
            referenced_min = r.min;
            owner_min = o.min;
            if creation {
                owner_max = o.max;
                dynamic = ann.dynamic;
            }
            annotated = true;
        }
    }

    let provenance = ctx.provenance(&event.id);
    let rel = StructuralRelationship {
        name: String::new(),
        side_a: RelationshipSide {
            class: referenced_class.to_string(),
            role: String::new(),
            min: referenced_min,
            max: CardMax::One,
        },
        side_b: RelationshipSide {
            class: owning_class.to_string(),
            role: String::new(),
            min: owner_min,
            max: owner_max,
        },
        dynamic,
        origin: RelOrigin::Reference { creation },
        provenance,
    };
    Ok((name_relationship_and_roles(rel, Some(&ref_field.name)), annotated))
}

fn trace_relationship(
    view: &mut ClassDiagramView,
    event: &str,
    source: String,
    rel: &StructuralRelationship,
    rule: RuleId,
    annotated: bool,
) {
    view.trace.push(TraceRecord {
        rule,
        event: event.to_string(),
        source,
        element_kind: ElementKind::Relationship,
        element: rel.name.clone(),
        note: format!(
            "{} {} -- {} {}{}",
            rel.side_a.card(),
            rel.side_a.class,
            rel.side_b.card(),
            rel.side_b.class,
            if annotated { "; cardinality annotation-sourced" } else { "" }
        ),
    });
    if !annotated {
        view.trace.push(TraceRecord {
            rule: RuleId::Default,
            event: event.to_string(),
            source: String::new(),
            element_kind: ElementKind::Relationship,
            element: rel.name.clone(),
            note: "D11: default cardinalities applied".to_string(),
        });
    }
}

// ---------------------------------------------------------------------------
// Creation views
// ---------------------------------------------------------------------------

fn derive_creation_view(
    event: &CommunicativeEvent,
    ctx: &mut DeriveContext<'_>,
) -> Result<ClassDiagramView, DeriveError> {
    let mut view = ClassDiagramView { event: event.id.clone(), ..Default::default() };

    // Registered aggregations, in document order, become classes.
    let aggs = aggregations_in_document_order(&event.message);
    let mut class_of_agg: BTreeMap<usize, String> = BTreeMap::new();
    for agg in &aggs {
        let object = ctx
            .model
            .objects
            .iter()
            .find(|(_, e)| {
                e.event == event.id
                    && crate::requirements::parser::resolve_path(&event.message, &e.path)
                        .is_some_and(|a| std::ptr::eq(a, *agg))
            })
            .map(|(name, _)| name.clone());
        let Some(object) = object else {
            return Err(DeriveError::UnregisteredAggregation {
                event: event.id.clone(),
                aggregation: agg.name.clone(),
            });
        };
        if ctx.out.class(&object).is_some() || view.new_classes.iter().any(|c| c.name == object) {
            return Err(DeriveError::DuplicateClass { event: event.id.clone(), class: object });
        }
        let class = derive_class_from_aggregation(agg, &object, event, ctx, &mut view)?;
        class_of_agg.insert(*agg as *const Aggregation as usize, object);
        view.new_classes.push(class);
    }

    // Containment relationships between registered aggregations related by an
    // iteration substructure.
    fn walk_containments(
        agg: &Aggregation,
        class_of_agg: &BTreeMap<usize, String>,
        pairs: &mut Vec<(String, String, String)>,
    ) {
        let parent = class_of_agg
            .get(&(agg as *const Aggregation as usize))
            .cloned()
            .unwrap_or_default();
        for it in agg.iterations() {
            if let Some(child) =
                class_of_agg.get(&(&it.body as *const Aggregation as usize))
            {
                pairs.push((parent.clone(), child.clone(), it.name.clone()));
            }
            walk_containments(&it.body, class_of_agg, pairs);
        }
        for a in agg.aggregations() {
            walk_containments(a, class_of_agg, pairs);
        }
    }
    let mut pairs = Vec::new();
    walk_containments(&event.message.root, &class_of_agg, &mut pairs);
    for (parent, child, iteration) in pairs {
        let (rel, annotated) =
            derive_relationship_from_iteration(&parent, &child, event, ctx)?;
        trace_relationship(&mut view, &event.id, iteration, &rel, RuleId::IterRel, annotated);
        view.relationships.push(rel);
    }

    // Reference fields add relationships to previously derived classes.
    for agg in &aggs {
        let owner = class_of_agg[&(*agg as *const Aggregation as usize)].clone();
        for field in agg.ref_fields() {
            let Domain::Ref(object) = &field.domain else { unreachable!() };
            let exists = ctx.out.class(object).is_some()
                || view.new_classes.iter().any(|c| c.name == *object);
            if !exists {
                return Err(DeriveError::ForwardReference {
                    event: event.id.clone(),
                    object: object.clone(),
                });
            }
            let (rel, annotated) =
                derive_relationship_from_reference(field, &owner, object, true, event, ctx)?;
            trace_relationship(
                &mut view,
                &event.id,
                format!("{}.{}", agg.name, field.name),
                &rel,
                RuleId::RefRel,
                annotated,
            );
            view.relationships.push(rel);
        }
    }

    services::add_creation_services(event, ctx, &mut view)?;
    Ok(view)
}

// ---------------------------------------------------------------------------
// Extension views
// ---------------------------------------------------------------------------

/// New attributes and relationships an extension event contributes, grouped
/// by the class they land on.
pub(crate) struct ExtensionOutcome {
    /// Attributes added to the affected class.
    pub target_attrs: Vec<String>,
    /// Relationship names added with the affected class as referencer.
    pub new_rels: Vec<String>,
    /// Attributes added to secondary classes via the iteration pattern.
    pub secondary_attrs: Vec<(String, Vec<String>)>,
}

fn derive_extension_view(
    event: &CommunicativeEvent,
    ctx: &mut DeriveContext<'_>,
) -> Result<ClassDiagramView, DeriveError> {
    let mut view = ClassDiagramView { event: event.id.clone(), ..Default::default() };
    let overrides = field_overrides(event);

    let affected: Vec<&Field> =
        event.message.root.ref_fields().filter(|f| f.affected).collect();
    if affected.len() != 1 {
        return Err(DeriveError::AffectedCount { event: event.id.clone() });
    }
    let Domain::Ref(target_object) = &affected[0].domain else { unreachable!() };
    if ctx.out.class(target_object).is_none() {
        return Err(DeriveError::ForwardReference {
            event: event.id.clone(),
            object: target_object.clone(),
        });
    }
    let target_class = target_object.clone();

    // Data fields extend the affected class.
    let mut target_attrs = Vec::new();
    for field in event.message.root.data_fields() {
        let provenance = ctx.provenance(&event.id);
        let outcome = build_attribute(field, &overrides, false, true, &event.id, provenance)?;
        if ctx.out.class(&target_class).is_some_and(|c| c.attribute(&outcome.attribute.name).is_some())
        {
            return Err(DeriveError::AttributeCollision {
                event: event.id.clone(),
                class: target_class.clone(),
                attribute: outcome.attribute.name.clone(),
            });
        }
        view.trace.push(TraceRecord {
            rule: RuleId::ExtAttr,
            event: event.id.clone(),
            source: format!("{}.{}", event.message.root.name, field.name),
            element_kind: ElementKind::Attribute,
            element: format!("{target_class}.{}", outcome.attribute.name),
            note: "class extension".to_string(),
        });
        if outcome.used_default_size {
            view.trace.push(TraceRecord {
                rule: RuleId::Default,
                event: event.id.clone(),
                source: format!("{}.{}", event.message.root.name, field.name),
                element_kind: ElementKind::Attribute,
                element: format!("{target_class}.{}", outcome.attribute.name),
                note: format!("D14: default string size {DEFAULT_STRING_SIZE} applied"),
            });
        }
        target_attrs.push(outcome.attribute.name.clone());
        view.extension_for(&target_class).attributes.push(outcome.attribute);
    }

    // Non-affected reference fields add dynamic relationships.
    let mut new_rels = Vec::new();
    for field in event.message.root.ref_fields().filter(|f| !f.affected) {
        let Domain::Ref(object) = &field.domain else { unreachable!() };
        if ctx.out.class(object).is_none() {
            return Err(DeriveError::ForwardReference {
                event: event.id.clone(),
                object: object.clone(),
            });
        }
        let (rel, annotated) = derive_relationship_from_reference(
            field,
            &target_class,
            object,
            false,
            event,
            ctx,
        )?;
        trace_relationship(
            &mut view,
            &event.id,
            format!("{}.{}", event.message.root.name, field.name),
            &rel,
            RuleId::RefRel,
            annotated,
        );
        new_rels.push(rel.name.clone());
        view.relationships.push(rel);
    }

    // Iterations extend the class referenced by their anchor field with the
    // sibling data fields.
    let mut secondary_attrs: Vec<(String, Vec<String>)> = Vec::new();
    for it in event.message.root.iterations() {
        let Some(anchor) = it.body.ref_fields().next() else {
            continue; // validated earlier; skip defensively
        };
        let Domain::Ref(anchor_object) = &anchor.domain else { unreachable!() };
        if ctx.out.class(anchor_object).is_none() {
            return Err(DeriveError::ForwardReference {
                event: event.id.clone(),
                object: anchor_object.clone(),
            });
        }
        let mut attrs = Vec::new();
        for field in it.body.data_fields() {
            let provenance = ctx.provenance(&event.id);
            let outcome =
                build_attribute(field, &overrides, false, true, &event.id, provenance)?;
            if ctx
                .out
                .class(anchor_object)
                .is_some_and(|c| c.attribute(&outcome.attribute.name).is_some())
            {
                return Err(DeriveError::AttributeCollision {
                    event: event.id.clone(),
                    class: anchor_object.clone(),
                    attribute: outcome.attribute.name.clone(),
                });
            }
            view.trace.push(TraceRecord {
                rule: RuleId::ExtAttr,
                event: event.id.clone(),
                source: format!("{}.{}", it.name, field.name),
                element_kind: ElementKind::Attribute,
                element: format!("{anchor_object}.{}", outcome.attribute.name),
                note: "secondary class extension".to_string(),
            });
            attrs.push(outcome.attribute.name.clone());
            view.extension_for(anchor_object).attributes.push(outcome.attribute);
        }
        if !attrs.is_empty() {
            secondary_attrs.push((anchor_object.clone(), attrs));
        }
    }

    if target_attrs.is_empty() && new_rels.is_empty() && secondary_attrs.is_empty() {
        return Err(DeriveError::EmptyView { event: event.id.clone() });
    }

    let outcome = ExtensionOutcome { target_attrs, new_rels, secondary_attrs };
    services::add_extension_services(event, &target_class, &outcome, ctx, &mut view)?;
    Ok(view)
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

/// Integrate a view into the model under construction. Validation happens
/// before any mutation, so a failed integration leaves the model unchanged.
pub(crate) fn integrate_view(
    ctx: &mut DeriveContext<'_>,
    view: ClassDiagramView,
) -> Result<(), DeriveError> {
    let event = view.event.clone();

    // Phase 1: check for collisions.
    for class in &view.new_classes {
        if ctx.out.class(&class.name).is_some() {
            return Err(DeriveError::DuplicateClass {
                event: event.clone(),
                class: class.name.clone(),
            });
        }
    }
    for ext in &view.extensions {
        let Some(existing) = ctx.out.class(&ext.class) else {
            if !view.new_classes.iter().any(|c| c.name == ext.class) {
                return Err(DeriveError::UnknownClass(ext.class.clone()));
            }
            continue;
        };
        for attr in &ext.attributes {
            if existing.attribute(&attr.name).is_some() {
                return Err(DeriveError::AttributeCollision {
                    event: event.clone(),
                    class: ext.class.clone(),
                    attribute: attr.name.clone(),
                });
            }
        }
        for svc in &ext.services {
            if existing.service(&svc.name).is_some() {
                return Err(DeriveError::ServiceCollision {
                    event: event.clone(),
                    class: ext.class.clone(),
                    service: svc.name.clone(),
                });
            }
        }
    }
    let mut rel_names: Vec<String> =
        ctx.out.relationships.iter().map(|r| r.name.clone()).collect();

    // Phase 2: apply.
    for class in view.new_classes {
        ctx.out.classes.push(class);
    }
    for ext in view.extensions {
        let class = ctx
            .out
            .class_mut(&ext.class)
            .expect("existence checked in phase 1");
        class.attributes.extend(ext.attributes);
        class.services.extend(ext.services);
    }
    for (class_name, txn) in view.transactions {
        let class = ctx
            .out
            .class_mut(&class_name)
            .ok_or_else(|| DeriveError::UnknownClass(class_name.clone()))?;
        class.transactions.push(txn);
    }
    let mut renames: Vec<(String, String)> = Vec::new();
    for mut rel in view.relationships {
        // Keep relationship names unique: a second relationship over the same
        // class pair gets the referenced-side role appended.
        if rel_names.contains(&rel.name) {
            let old = rel.name.clone();
            let candidate = format!("{}_{}", rel.name, rel.side_a.role);
            rel.name = if rel_names.contains(&candidate) {
                format!("{}_{}", candidate, rel.provenance.seq)
            } else {
                candidate
            };
            renames.push((old, rel.name.clone()));
        }
        rel_names.push(rel.name.clone());

        // Creation services of max-1 partners gain an object-valued argument.
        for (side, other) in [(&rel.side_a, &rel.side_b), (&rel.side_b, &rel.side_a)] {
            if other.max != CardMax::One {
                continue;
            }
            if let Some(class) = ctx.out.class_mut(&side.class) {
                // Arguments for classes created by this same event were added
                // when the creation service was built.
                if class.provenance.event == rel.provenance.event {
                    continue;
                }
                if let Some(svc) =
                    class.services.iter_mut().find(|s| s.kind == crate::model::ServiceKind::Creation)
                {
                    let arg_name = format!("p_agr{}", other.class);
                    if svc.args.iter().all(|a| a.name != arg_name) {
                        svc.args.push(Argument {
                            name: arg_name,
                            data_type: ArgType::Object(other.class.clone()),
                            nulls_allowed: other.min == 0,
                            source_event: rel.provenance.event.clone(),
                        });
                    }
                }
            }
        }
        ctx.out.relationships.push(rel);
    }

    let mut trace = view.trace;
    for record in &mut trace {
        for (old, new) in &renames {
            if &record.element == old && record.element_kind == ElementKind::Relationship {
                record.element = new.clone();
            }
        }
    }
    ctx.out.trace.records.extend(trace);
    Ok(())
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

/// Sort every member list by the canonical event rank so the model is
/// identical no matter which linear extension the fold used.
fn normalize(model: &mut ConceptualModel, rank: &BTreeMap<String, u32>) {
    let rank_of = |p: &Provenance| -> (u32, u32, u32) {
        let r = rank.get(&p.event).copied().unwrap_or(u32::MAX);
        (u32::from(p.revision), r, p.seq)
    };
    for class in &mut model.classes {
        class.attributes.sort_by_key(|a| rank_of(&a.provenance));
        class.services.sort_by_key(|s| rank_of(&s.provenance));
        class.transactions.sort_by_key(|t| rank_of(&t.provenance));
        for svc in &mut class.services {
            let arg_rank = |a: &Argument| rank.get(&a.source_event).copied().unwrap_or(u32::MAX);
            svc.args.sort_by_key(arg_rank);
        }
    }
    model.classes.sort_by(|a, b| a.name.cmp(&b.name));
    model.relationships.sort_by(|a, b| a.name.cmp(&b.name));
}
