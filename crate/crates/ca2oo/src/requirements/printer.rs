//! Canonical `.carm` printing.
//!
//! The output is fully normalized: processes sort by acronym, events by
//! (process, event id), clauses appear in a fixed order and annotations are
//! sorted, so two structurally equal models print byte-identically.

use std::fmt::Write as _;

use crate::message::{Aggregation, Domain, Field, Item, MessageStructure, Substructure};
use crate::names::event_id_sort_key;
use crate::requirements::{
    CommunicativeEvent, ReactionKind, RequirementsModel, Restriction, RestrictionKind,
};

/// Print the canonical form of a requirements model.
pub fn print_canonical(model: &RequirementsModel) -> String {
    let mut out = String::new();

    let mut processes = model.processes.clone();
    processes.sort_by(|a, b| a.acronym.cmp(&b.acronym));
    for p in &processes {
        let _ = writeln!(out, "process {} \"{}\"", p.acronym, p.name);
    }

    let mut events: Vec<&CommunicativeEvent> = model.events.iter().collect();
    events.sort_by_key(|e| (e.process.clone(), event_id_sort_key(&e.id)));
    for e in events {
        out.push('\n');
        print_event(&mut out, model, e);
    }
    if !out.ends_with('\n') {
        out.push('\n');
    }
    out
}

fn print_event(out: &mut String, model: &RequirementsModel, e: &CommunicativeEvent) {
    let _ = writeln!(out, "event {} \"{}\" in {} {{", e.id, e.title, e.process);
    if !e.primary_actor.is_empty() {
        let _ = writeln!(out, "  primary: \"{}\"", e.primary_actor);
    }
    if !e.support_actor.is_empty() {
        let _ = writeln!(out, "  support: \"{}\"", e.support_actor);
    }

    print_message(out, &e.message);

    let mut registers: Vec<(&String, &crate::message::RegistryEntry)> =
        model.objects.iter().filter(|(_, entry)| entry.event == e.id).collect();
    registers.sort_by(|a, b| a.0.cmp(b.0));
    for (object, entry) in registers {
        let _ = writeln!(out, "  registers {} = {}", object, entry.path.join("."));
    }

    for r in sorted_restrictions(&e.restrictions) {
        print_restriction(out, r);
    }

    let eoe = match e.reaction.end_of_editing {
        Some(true) => " end-of-editing yes",
        Some(false) => " end-of-editing no",
        None => "",
    };
    let kind = match e.reaction.kind {
        ReactionKind::Creation => "creation",
        ReactionKind::Extension => "extension",
    };
    let _ = writeln!(out, "  reaction {} name \"{}\"{}", kind, e.reaction.name, eoe);

    let mut precedes = e.precedes.clone();
    precedes.sort_by_key(|d| (event_id_sort_key(&d.to), d.loopback));
    for d in &precedes {
        match (&d.loopback, &d.guard) {
            (false, _) => {
                let _ = writeln!(out, "  precedes {}", d.to);
            }
            (true, None) => {
                let _ = writeln!(out, "  precedes {} loopback", d.to);
            }
            (true, Some(g)) => {
                let _ = writeln!(out, "  precedes {} loopback \"{}\"", d.to, g);
            }
        }
    }

    out.push_str("}\n");
}

fn print_message(out: &mut String, ms: &MessageStructure) {
    let _ = write!(out, "  message {} = ", ms.root.name);
    print_aggregation_body(out, &ms.root, 1);
    out.push('\n');
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn print_aggregation_body(out: &mut String, agg: &Aggregation, depth: usize) {
    out.push('<');
    out.push('\n');
    for (i, item) in agg.items.iter().enumerate() {
        indent(out, depth + 1);
        match item {
            Item::Field(f) => print_field(out, f),
            Item::Sub(Substructure::Aggregation(a)) => {
                let _ = write!(out, "{} = ", a.name);
                print_aggregation_body(out, a, depth + 1);
            }
            Item::Sub(Substructure::Iteration(it)) => {
                let _ = write!(out, "{} = {{ ", it.name);
                if it.body.name.is_empty() {
                    print_aggregation_body(out, &it.body, depth + 1);
                } else {
                    let _ = write!(out, "{} = ", it.body.name);
                    print_aggregation_body(out, &it.body, depth + 1);
                }
                out.push_str(" }");
            }
        }
        if i + 1 < agg.items.len() {
            out.push_str(" +");
        }
        out.push('\n');
    }
    indent(out, depth);
    out.push('>');
}

fn print_field(out: &mut String, f: &Field) {
    let _ = write!(out, "{} [{} ", f.name, f.op.as_str());
    match &f.domain {
        Domain::Number => out.push_str("number"),
        Domain::Text => out.push_str("text"),
        Domain::Date => out.push_str("date"),
        Domain::DateTime => out.push_str("datetime"),
        Domain::Money => out.push_str("money"),
        Domain::Enum(lits) => {
            let _ = write!(out, "enum({})", lits.join("|"));
        }
        Domain::Ref(name) => {
            let _ = write!(out, "ref {name}");
        }
    }
    if let Some(size) = f.size {
        let _ = write!(out, "({size})");
    }
    if f.affected {
        out.push_str(" affected");
    }
    if let Some(init) = &f.init {
        let _ = write!(out, " init \"{init}\"");
    }
    out.push(']');
}

/// Fixed restriction order: identified-by, cardinality, size, nulls, kind,
/// type; ties broken by payload names.
fn sorted_restrictions(restrictions: &[Restriction]) -> Vec<&Restriction> {
    let mut rs: Vec<&Restriction> = restrictions.iter().collect();
    rs.sort_by_key(|r| restriction_key(r));
    rs
}

fn restriction_key(r: &Restriction) -> (u8, String, String) {
    match &r.kind {
        RestrictionKind::IdentifiedBy { object, .. } => (0, object.clone(), String::new()),
        RestrictionKind::Cardinality { a, b, .. } => (1, a.object.clone(), b.object.clone()),
        RestrictionKind::Size { substructure, field, .. } => {
            (2, substructure.clone(), field.clone())
        }
        RestrictionKind::Nulls { substructure, field, .. } => {
            (3, substructure.clone(), field.clone())
        }
        RestrictionKind::AttributeKind { substructure, field, .. } => {
            (4, substructure.clone(), field.clone())
        }
        RestrictionKind::TypeOverride { substructure, field, .. } => {
            (5, substructure.clone(), field.clone())
        }
    }
}

fn print_restriction(out: &mut String, r: &Restriction) {
    match &r.kind {
        RestrictionKind::IdentifiedBy { object, fields } => {
            let _ = writeln!(out, "  identified-by {} ({})", object, fields.join(", "));
        }
        RestrictionKind::Cardinality { a, dynamic, b } => {
            let dyn_str = if *dynamic { " dynamic" } else { "" };
            let _ = writeln!(
                out,
                "  cardinality {} {}:{}{} -- {}:{} {}",
                a.object,
                a.min,
                a.max.as_str(),
                dyn_str,
                b.min,
                b.max.as_str(),
                b.object
            );
        }
        RestrictionKind::Size { substructure, field, size } => {
            let _ = writeln!(out, "  size {substructure}.{field} = {size}");
        }
        RestrictionKind::Nulls { substructure, field, allowed } => {
            let v = if *allowed { "yes" } else { "no" };
            let _ = writeln!(out, "  nulls {substructure}.{field} = {v}");
        }
        RestrictionKind::AttributeKind { substructure, field, kind } => {
            let v = match kind {
                crate::requirements::DeclaredKind::Constant => "constant",
                crate::requirements::DeclaredKind::Variable => "variable",
            };
            let _ = writeln!(out, "  kind {substructure}.{field} = {v}");
        }
        RestrictionKind::TypeOverride { substructure, field, data_type } => {
            let _ = writeln!(out, "  type {substructure}.{field} = {}", data_type.as_str());
        }
    }
}
