//! Semantic validation of a parsed requirements model.
//!
//! Errors flag invariant violations that derivation cannot work around;
//! warnings flag every place a derivation default will be applied (missing
//! identifier, missing size, missing cardinality) plus advisory situations
//! such as forward references.

use std::collections::{BTreeMap, BTreeSet};

use crate::diag::{codes, sort_diagnostics, Diagnostic};
use crate::message::{Domain, Field, MessageStructure, OpTag};
use crate::requirements::{
    CommunicativeEvent, ReactionKind, RequirementsModel, RestrictionKind, TypeName,
};

/// Validate a model, returning all diagnostics sorted by (position, code).
pub fn validate(model: &RequirementsModel) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    for event in &model.events {
        check_event(model, event, &mut diags);
    }
    check_cardinality_conflicts(model, &mut diags);
    check_cycles(model, &mut diags);
    check_forward_references(model, &mut diags);

    sort_diagnostics(&mut diags);
    diags
}

fn check_event(model: &RequirementsModel, event: &CommunicativeEvent, diags: &mut Vec<Diagnostic>) {
    if model.process(&event.process).is_none() {
        diags.push(Diagnostic::error(
            event.pos,
            codes::UNKNOWN_PROCESS,
            format!("event {} names undeclared process {}", event.id, event.process),
        ));
    }

    if event.message.is_empty() {
        diags.push(Diagnostic::error(
            event.pos,
            codes::EMPTY_MESSAGE,
            format!("empty message: event {} conveys no fields", event.id),
        ));
    }

    for field in event.message.all_fields() {
        if field.affected && !field.domain.is_ref() {
            diags.push(Diagnostic::error(
                field.pos,
                codes::AFFECTED_MISPLACED,
                format!("`affected` only applies to reference fields ({})", field.name),
            ));
        }
        if field.init.is_some() && field.domain.is_ref() {
            diags.push(Diagnostic::error(
                field.pos,
                codes::INIT_ON_REF,
                format!("`init` only applies to data fields ({})", field.name),
            ));
        }
        if field.op == OpTag::Generated && field.domain != Domain::Number {
            diags.push(Diagnostic::error(
                field.pos,
                codes::GENERATED_DOMAIN,
                format!("generated field {} must have the number domain", field.name),
            ));
        }
    }

    match event.reaction.kind {
        ReactionKind::Creation => check_creation_event(model, event, diags),
        ReactionKind::Extension => check_extension_event(model, event, diags),
    }

    check_annotations(model, event, diags);
    check_default_warnings(model, event, diags);
}

fn check_creation_event(
    model: &RequirementsModel,
    event: &CommunicativeEvent,
    diags: &mut Vec<Diagnostic>,
) {
    for field in event.message.all_fields() {
        if field.affected {
            diags.push(Diagnostic::error(
                field.pos,
                codes::AFFECTED_MISPLACED,
                format!(
                    "creation event {} cannot mark field {} as affected",
                    event.id, field.name
                ),
            ));
        }
    }

    // Every aggregation of a creation message must be registered: each one
    // becomes a class.
    let registered: BTreeSet<&str> = model
        .objects
        .iter()
        .filter(|(_, e)| e.event == event.id)
        .map(|(_, e)| e.path.last().map(String::as_str).unwrap_or(""))
        .collect();
    for agg in crate::message::aggregations_in_document_order(&event.message) {
        if !registered.contains(agg.name.as_str()) {
            diags.push(Diagnostic::error(
                agg.pos,
                codes::UNREGISTERED_AGG,
                format!(
                    "aggregation {} of creation event {} is not registered as a business object",
                    agg.name, event.id
                ),
            ));
        }
    }

    if event.reaction.end_of_editing == Some(true) && registered.len() <= 1 {
        diags.push(Diagnostic::warning(
            event.reaction.pos,
            codes::EOE_SINGLE_CLASS,
            format!(
                "end-of-editing requested but event {} derives a single class; no service is added",
                event.id
            ),
        ));
    }
}

fn check_extension_event(
    model: &RequirementsModel,
    event: &CommunicativeEvent,
    diags: &mut Vec<Diagnostic>,
) {
    if model.objects.iter().any(|(_, e)| e.event == event.id) {
        diags.push(Diagnostic::error(
            event.pos,
            codes::UNREGISTERED_AGG,
            format!("extension event {} cannot register business objects", event.id),
        ));
    }

    let affected: Vec<&Field> =
        event.message.root.ref_fields().filter(|f| f.affected).collect();
    let affected_anywhere =
        event.message.all_fields().iter().filter(|f| f.affected).count();
    if affected.len() != 1 {
        diags.push(Diagnostic::error(
            event.pos,
            codes::AFFECTED_COUNT,
            format!(
                "extension event {} must mark exactly one reference field as affected (found {})",
                event.id,
                affected.len()
            ),
        ));
    } else if affected_anywhere > affected.len() {
        diags.push(Diagnostic::error(
            event.pos,
            codes::AFFECTED_MISPLACED,
            format!(
                "extension event {}: the affected field must be a top-level field",
                event.id
            ),
        ));
    }

    // Iterations in extension messages follow the secondary-extension shape:
    // one anchor reference plus the data fields that extend its class.
    for it in event.message.root.iterations() {
        let refs = it.body.ref_fields().count();
        if refs != 1 {
            diags.push(Diagnostic::error(
                it.pos,
                codes::EXT_ITERATION,
                format!(
                    "iteration {} in extension event {} must contain exactly one reference field",
                    it.name, event.id
                ),
            ));
        }
        if it.body.iterations().next().is_some() || it.body.aggregations().next().is_some() {
            diags.push(Diagnostic::error(
                it.pos,
                codes::EXT_ITERATION,
                format!(
                    "iteration {} in extension event {} cannot nest further substructures",
                    it.name, event.id
                ),
            ));
        }
    }

    // An extension must contribute something.
    let top_attrs = event.message.root.data_fields().count();
    let new_rels = event.message.root.ref_fields().filter(|f| !f.affected).count();
    let iter_attrs: usize =
        event.message.root.iterations().map(|it| it.body.data_fields().count()).sum();
    if top_attrs + new_rels + iter_attrs == 0 {
        diags.push(Diagnostic::error(
            event.pos,
            codes::EMPTY_MESSAGE,
            format!("extension event {} adds no attributes and no relationships", event.id),
        ));
    }

    if event.reaction.end_of_editing.is_some() {
        diags.push(Diagnostic::warning(
            event.reaction.pos,
            codes::EOE_SINGLE_CLASS,
            format!("end-of-editing has no effect on extension event {}", event.id),
        ));
    }
}

/// Admissible data types per field domain.
fn admissible(domain: &Domain, t: TypeName) -> bool {
    match domain {
        Domain::Number => matches!(
            t,
            TypeName::Nat | TypeName::Int | TypeName::Real | TypeName::Autonumeric
        ),
        Domain::Text => matches!(t, TypeName::String | TypeName::Text),
        Domain::Date | Domain::DateTime => {
            matches!(t, TypeName::Date | TypeName::Time | TypeName::DateTime)
        }
        Domain::Money => matches!(t, TypeName::Real),
        Domain::Enum(_) => matches!(t, TypeName::String),
        Domain::Ref(_) => false,
    }
}

fn check_annotations(
    model: &RequirementsModel,
    event: &CommunicativeEvent,
    diags: &mut Vec<Diagnostic>,
) {
    let mut seen_identified: BTreeSet<&str> = BTreeSet::new();
    let mut seen_field_annotations: BTreeSet<(u8, &str, &str)> = BTreeSet::new();

    for r in &event.restrictions {
        match &r.kind {
            RestrictionKind::IdentifiedBy { object, fields } => {
                if !seen_identified.insert(object) {
                    diags.push(Diagnostic::error(
                        r.pos,
                        codes::IDENTIFIER_FIELDS,
                        format!("duplicate identified-by for {object}"),
                    ));
                    continue;
                }
                let Some(entry) = model.objects.get(object) else {
                    diags.push(Diagnostic::error(
                        r.pos,
                        codes::ANNOTATION_TARGET,
                        format!("identified-by names unregistered object {object}"),
                    ));
                    continue;
                };
                if entry.event != event.id {
                    diags.push(Diagnostic::error(
                        r.pos,
                        codes::ANNOTATION_TARGET,
                        format!(
                            "identified-by for {object} must appear in its registering event {}",
                            entry.event
                        ),
                    ));
                    continue;
                }
                let agg_name = entry.path.last().cloned().unwrap_or_default();
                let agg_fields = event
                    .message
                    .substructure_fields(&agg_name)
                    .unwrap_or_default();
                for f in fields {
                    match agg_fields.iter().find(|af| &af.name == f) {
                        None => diags.push(Diagnostic::error(
                            r.pos,
                            codes::IDENTIFIER_FIELDS,
                            format!("identifier field {f} does not exist in {agg_name}"),
                        )),
                        Some(af) if af.domain.is_ref() => diags.push(Diagnostic::error(
                            r.pos,
                            codes::IDENTIFIER_FIELDS,
                            format!("identifier field {f} must be a data field"),
                        )),
                        Some(_) => {}
                    }
                }
            }
            RestrictionKind::Cardinality { a, b, .. } => {
                for side in [a, b] {
                    if !model.objects.contains(&side.object) {
                        diags.push(Diagnostic::error(
                            r.pos,
                            codes::ANNOTATION_TARGET,
                            format!("cardinality names unregistered object {}", side.object),
                        ));
                    }
                }
            }
            RestrictionKind::Size { substructure, field, size } => {
                let disc = 2u8;
                if !seen_field_annotations.insert((disc, substructure, field)) {
                    diags.push(Diagnostic::error(
                        r.pos,
                        codes::ANNOTATION_APPLIES,
                        format!("duplicate size annotation for {substructure}.{field}"),
                    ));
                }
                match find_field(&event.message, substructure, field) {
                    None => push_missing_target(diags, r.pos, substructure, field),
                    Some(f) => {
                        if f.domain != Domain::Text {
                            diags.push(Diagnostic::error(
                                r.pos,
                                codes::ANNOTATION_APPLIES,
                                format!("size only applies to text fields ({field})"),
                            ));
                        }
                        if *size == 0 {
                            diags.push(Diagnostic::error(
                                r.pos,
                                codes::ANNOTATION_APPLIES,
                                format!("size of {field} must be at least 1"),
                            ));
                        }
                    }
                }
            }
            RestrictionKind::Nulls { substructure, field, allowed } => {
                let disc = 3u8;
                if !seen_field_annotations.insert((disc, substructure, field)) {
                    diags.push(Diagnostic::error(
                        r.pos,
                        codes::ANNOTATION_APPLIES,
                        format!("duplicate nulls annotation for {substructure}.{field}"),
                    ));
                }
                match find_field(&event.message, substructure, field) {
                    None => push_missing_target(diags, r.pos, substructure, field),
                    Some(f) => {
                        if f.domain.is_ref() {
                            diags.push(Diagnostic::error(
                                r.pos,
                                codes::ANNOTATION_APPLIES,
                                format!("nulls only applies to data fields ({field})"),
                            ));
                        } else if event.reaction.kind == ReactionKind::Extension {
                            diags.push(Diagnostic::error(
                                r.pos,
                                codes::EXT_FIELD_ANNOTATION,
                                format!(
                                    "extension-derived attributes always allow nulls ({field})"
                                ),
                            ));
                        } else if *allowed && is_identifier_field(model, event, substructure, field) {
                            diags.push(Diagnostic::error(
                                r.pos,
                                codes::IDENTIFIER_PROPS,
                                format!("identifier field {field} cannot allow nulls"),
                            ));
                        }
                    }
                }
            }
            RestrictionKind::AttributeKind { substructure, field, kind } => {
                let disc = 4u8;
                if !seen_field_annotations.insert((disc, substructure, field)) {
                    diags.push(Diagnostic::error(
                        r.pos,
                        codes::ANNOTATION_APPLIES,
                        format!("duplicate kind annotation for {substructure}.{field}"),
                    ));
                }
                match find_field(&event.message, substructure, field) {
                    None => push_missing_target(diags, r.pos, substructure, field),
                    Some(f) => {
                        if f.domain.is_ref() {
                            diags.push(Diagnostic::error(
                                r.pos,
                                codes::ANNOTATION_APPLIES,
                                format!("kind only applies to data fields ({field})"),
                            ));
                        } else if event.reaction.kind == ReactionKind::Extension {
                            diags.push(Diagnostic::error(
                                r.pos,
                                codes::EXT_FIELD_ANNOTATION,
                                format!("extension-derived attributes are always variable ({field})"),
                            ));
                        } else if *kind == crate::requirements::DeclaredKind::Variable
                            && is_identifier_field(model, event, substructure, field)
                        {
                            diags.push(Diagnostic::error(
                                r.pos,
                                codes::IDENTIFIER_PROPS,
                                format!("identifier field {field} must stay constant"),
                            ));
                        }
                    }
                }
            }
            RestrictionKind::TypeOverride { substructure, field, data_type } => {
                let disc = 5u8;
                if !seen_field_annotations.insert((disc, substructure, field)) {
                    diags.push(Diagnostic::error(
                        r.pos,
                        codes::ANNOTATION_APPLIES,
                        format!("duplicate type annotation for {substructure}.{field}"),
                    ));
                }
                match find_field(&event.message, substructure, field) {
                    None => push_missing_target(diags, r.pos, substructure, field),
                    Some(f) => {
                        if f.op == OpTag::Generated && *data_type != TypeName::Autonumeric {
                            diags.push(Diagnostic::error(
                                r.pos,
                                codes::TYPE_OVERRIDE,
                                format!("generated field {field} always maps to Autonumeric"),
                            ));
                        } else if !admissible(&f.domain, *data_type) {
                            diags.push(Diagnostic::error(
                                r.pos,
                                codes::TYPE_OVERRIDE,
                                format!(
                                    "type {} is not admissible for the domain of {field}",
                                    data_type.as_str()
                                ),
                            ));
                        }
                    }
                }
            }
        }
    }
}

fn push_missing_target(
    diags: &mut Vec<Diagnostic>,
    pos: crate::diag::Pos,
    substructure: &str,
    field: &str,
) {
    diags.push(Diagnostic::error(
        pos,
        codes::ANNOTATION_TARGET,
        format!("annotation target {substructure}.{field} does not exist"),
    ));
}

fn find_field<'a>(ms: &'a MessageStructure, substructure: &str, field: &str) -> Option<&'a Field> {
    ms.substructure_fields(substructure)?
        .into_iter()
        .find(|f| f.name == field)
}

fn is_identifier_field(
    model: &RequirementsModel,
    event: &CommunicativeEvent,
    substructure: &str,
    field: &str,
) -> bool {
    event.restrictions.iter().any(|r| match &r.kind {
        RestrictionKind::IdentifiedBy { object, fields } => {
            if !fields.iter().any(|f| f == field) {
                return false;
            }
            // The annotation addresses the same aggregation the object is
            // registered under (possibly via the wrapping iteration name).
            let Some(entry) = model.objects.get(object) else { return false };
            let Some(agg_name) = entry.path.last() else { return false };
            agg_name == substructure
                || event.message.substructure_fields(substructure)
                    == event.message.substructure_fields(agg_name)
        }
        _ => false,
    })
}

// ---------------------------------------------------------------------------
// Model-level checks
// ---------------------------------------------------------------------------

fn check_cardinality_conflicts(model: &RequirementsModel, diags: &mut Vec<Diagnostic>) {
    let mut seen: BTreeMap<(String, String), crate::diag::Pos> = BTreeMap::new();
    for event in &model.events {
        for r in &event.restrictions {
            if let RestrictionKind::Cardinality { a, b, .. } = &r.kind {
                let mut key = [a.object.clone(), b.object.clone()];
                key.sort();
                let key = (key[0].clone(), key[1].clone());
                if seen.insert(key.clone(), r.pos).is_some() {
                    diags.push(Diagnostic::error(
                        r.pos,
                        codes::CARDINALITY_CONFLICT,
                        format!(
                            "conflicting cardinality annotations for {} -- {}",
                            key.0, key.1
                        ),
                    ));
                }
            }
        }
    }
}

fn check_cycles(model: &RequirementsModel, diags: &mut Vec<Diagnostic>) {
    let mut adjacency: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in &model.events {
        adjacency.entry(e.id.as_str()).or_default();
    }
    for edge in model.precedences() {
        if edge.loopback {
            continue;
        }
        let Some(from) = model.event(&edge.from) else { continue };
        let Some(to) = model.event(&edge.to) else { continue };
        adjacency.entry(from.id.as_str()).or_default().push(to.id.as_str());
    }
    // Keep a copy with owned strings so we can report after the borrow ends.
    let adjacency: BTreeMap<String, Vec<String>> = adjacency
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.into_iter().map(String::from).collect()))
        .collect();

    if let Some(cycle) = find_cycle(&adjacency) {
        diags.push(Diagnostic::error(
            None,
            codes::UNFLAGGED_CYCLE,
            format!(
                "precedence cycle without loopback marking: {}",
                cycle.join(" -> ")
            ),
        ));
    }
}

/// Returns one cycle (as the list of events on it) if the graph has any.
fn find_cycle(adjacency: &BTreeMap<String, Vec<String>>) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut marks: BTreeMap<&str, Mark> =
        adjacency.keys().map(|k| (k.as_str(), Mark::White)).collect();

    fn dfs<'a>(
        node: &'a str,
        adjacency: &'a BTreeMap<String, Vec<String>>,
        marks: &mut BTreeMap<&'a str, Mark>,
        stack: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        marks.insert(node, Mark::Grey);
        stack.push(node);
        if let Some(nexts) = adjacency.get(node) {
            for next in nexts {
                match marks.get(next.as_str()).copied().unwrap_or(Mark::White) {
                    Mark::Grey => {
                        let start = stack.iter().position(|n| *n == next).unwrap_or(0);
                        let mut cycle: Vec<String> =
                            stack[start..].iter().map(|s| s.to_string()).collect();
                        cycle.push(next.clone());
                        return Some(cycle);
                    }
                    Mark::White => {
                        if let Some(c) = dfs(next, adjacency, marks, stack) {
                            return Some(c);
                        }
                    }
                    Mark::Black => {}
                }
            }
        }
        stack.pop();
        marks.insert(node, Mark::Black);
        None
    }

    let keys: Vec<&str> = adjacency.keys().map(String::as_str).collect();
    for key in keys {
        if marks[key] == Mark::White {
            let mut stack = Vec::new();
            if let Some(c) = dfs(key, adjacency, &mut marks, &mut stack) {
                return Some(c);
            }
        }
    }
    None
}

fn check_forward_references(model: &RequirementsModel, diags: &mut Vec<Diagnostic>) {
    // Reachability over non-loopback edges: realizes "registered no later
    // than referenced" checking.
    let ids: Vec<&str> = model.events.iter().map(|e| e.id.as_str()).collect();
    let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let n = ids.len();
    let mut reach = vec![vec![false; n]; n];
    for edge in model.precedences() {
        if edge.loopback {
            continue;
        }
        if let (Some(&f), Some(&t)) = (index.get(edge.from.as_str()), index.get(edge.to.as_str()))
        {
            reach[f][t] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }

    for event in &model.events {
        let Some(&ei) = index.get(event.id.as_str()) else { continue };
        for field in event.message.all_fields() {
            if let Domain::Ref(object) = &field.domain {
                let Some(entry) = model.objects.get(object) else { continue };
                if entry.event == event.id {
                    continue;
                }
                let Some(&ri) = index.get(entry.event.as_str()) else { continue };
                if !reach[ri][ei] {
                    diags.push(Diagnostic::warning(
                        field.pos,
                        codes::FORWARD_REFERENCE,
                        format!(
                            "field {} references {object}, registered by {}, which does not precede {}",
                            field.name, entry.event, event.id
                        ),
                    ));
                }
            }
        }
    }
}

fn check_default_warnings(
    model: &RequirementsModel,
    event: &CommunicativeEvent,
    diags: &mut Vec<Diagnostic>,
) {
    // W901: registered object without a declared identifier.
    if event.reaction.kind == ReactionKind::Creation {
        let mut objects: Vec<(&String, &crate::message::RegistryEntry)> =
            model.objects.iter().filter(|(_, e)| e.event == event.id).collect();
        objects.sort_by(|a, b| a.0.cmp(b.0));
        for (object, entry) in objects {
            if event.identified_by(object).is_none() {
                diags.push(Diagnostic::warning(
                    entry.pos,
                    codes::DEFAULT_IDENTIFIER,
                    format!(
                        "no identifier declared for {object}; generated surrogate id will be used"
                    ),
                ));
            }
        }
    }

    // W902: text fields that will take the default string size.
    for field in event.message.all_fields() {
        if field.domain != Domain::Text || field.size.is_some() {
            continue;
        }
        let annotated = event.restrictions.iter().any(|r| match &r.kind {
            RestrictionKind::Size { field: f, .. } => f == &field.name,
            RestrictionKind::TypeOverride { field: f, data_type, .. } => {
                f == &field.name && *data_type == TypeName::Text
            }
            _ => false,
        });
        if !annotated {
            diags.push(Diagnostic::warning(
                field.pos,
                codes::DEFAULT_SIZE,
                format!(
                    "no size declared for text field {}; default size {} will be used",
                    field.name,
                    crate::model::DEFAULT_STRING_SIZE
                ),
            ));
        }
    }

    // W903: relationships that will take default cardinalities.
    let annotated_pairs: BTreeSet<(String, String)> = model
        .events
        .iter()
        .flat_map(|e| e.restrictions.iter())
        .filter_map(|r| match &r.kind {
            RestrictionKind::Cardinality { a, b, .. } => {
                let mut key = [a.object.clone(), b.object.clone()];
                key.sort();
                Some((key[0].clone(), key[1].clone()))
            }
            _ => None,
        })
        .collect();
    let mut warn_pair = |a: &str, b: &str, pos, diags: &mut Vec<Diagnostic>| {
        let mut key = [a.to_string(), b.to_string()];
        key.sort();
        if !annotated_pairs.contains(&(key[0].clone(), key[1].clone())) {
            diags.push(Diagnostic::warning(
                pos,
                codes::DEFAULT_CARDINALITY,
                format!("no cardinality declared for {a} -- {b}; defaults will be applied"),
            ));
        }
    };

    let object_of = |agg_name: &str| -> Option<String> {
        model
            .objects
            .iter()
            .find(|(_, e)| {
                e.event == event.id && e.path.last().map(String::as_str) == Some(agg_name)
            })
            .map(|(name, _)| name.clone())
    };

    match event.reaction.kind {
        ReactionKind::Creation => {
            // Containment pairs via iterations.
            fn walk_iterations(
                agg: &crate::message::Aggregation,
                parent_obj: Option<&String>,
                object_of: &dyn Fn(&str) -> Option<String>,
                warn: &mut dyn FnMut(&str, &str, crate::diag::Pos),
            ) {
                let this_obj = object_of(&agg.name);
                let this_ref = this_obj.as_ref().or(parent_obj);
                for it in agg.iterations() {
                    if let (Some(p), Some(c)) = (this_ref, object_of(&it.body.name)) {
                        warn(p, &c, it.pos);
                    }
                    walk_iterations(&it.body, this_ref, object_of, warn);
                }
                for a in agg.aggregations() {
                    walk_iterations(a, this_ref, object_of, warn);
                }
            }
            let mut warn = |a: &str, b: &str, pos| warn_pair(a, b, pos, diags);
            walk_iterations(&event.message.root, None, &object_of, &mut warn);

            // Reference pairs: owning aggregation's object vs referenced.
            for agg in crate::message::aggregations_in_document_order(&event.message) {
                let Some(owner) = object_of(&agg.name) else { continue };
                for field in agg.ref_fields() {
                    if let Domain::Ref(object) = &field.domain {
                        warn_pair(object, &owner, field.pos, diags);
                    }
                }
            }
        }
        ReactionKind::Extension => {
            let affected = event
                .message
                .root
                .ref_fields()
                .find(|f| f.affected)
                .and_then(|f| match &f.domain {
                    Domain::Ref(o) => Some(o.clone()),
                    _ => None,
                });
            if let Some(affected) = affected {
                for field in event.message.root.ref_fields().filter(|f| !f.affected) {
                    if let Domain::Ref(object) = &field.domain {
                        warn_pair(object, &affected, field.pos, diags);
                    }
                }
            }
        }
    }
}
