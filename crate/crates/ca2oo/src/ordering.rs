//! Event ordering: diagram extension, loopback removal and deterministic
//! topological ordering.
//!
//! The extended diagram closes a business process over its precedent events.
//! Removing the flagged loopback edges yields a strict partial order; Kahn's
//! algorithm with a fixed tie-break then produces the processing order.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use thiserror::Error;

use crate::names::event_id_sort_key;
use crate::requirements::{PrecedenceEdge, RequirementsModel};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OrderingError {
    #[error("unknown process {0}")]
    UnknownProcess(String),
    #[error("precedence cycle without loopback marking: {}", .0.join(" -> "))]
    UnflaggedCycle(Vec<String>),
}

/// A communicative event diagram extended with every precedent event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedDiagram {
    pub root_process: String,
    pub events: BTreeSet<String>,
    pub edges: Vec<PrecedenceEdge>,
    /// Process acronym per event, used by the ordering tie-break.
    pub processes: BTreeMap<String, String>,
}

/// The strict partial order left after removing loopbacks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventPoset {
    pub events: BTreeSet<String>,
    pub order_edges: Vec<(String, String)>,
    pub removed: Vec<PrecedenceEdge>,
    pub processes: BTreeMap<String, String>,
}

impl EventPoset {
    /// Events without precedents: these are the ones attached to the
    /// (implicit) start node.
    pub fn sources(&self) -> Vec<String> {
        let targets: BTreeSet<&String> = self.order_edges.iter().map(|(_, t)| t).collect();
        self.events.iter().filter(|e| !targets.contains(e)).cloned().collect()
    }

    /// True when `order` is a linear extension of this poset: a permutation
    /// of the event set that respects every order edge.
    pub fn is_linear_extension(&self, order: &[String]) -> bool {
        if order.len() != self.events.len() {
            return false;
        }
        let index: BTreeMap<&String, usize> =
            order.iter().enumerate().map(|(i, e)| (e, i)).collect();
        if !self.events.iter().all(|e| index.contains_key(e)) {
            return false;
        }
        self.order_edges
            .iter()
            .all(|(from, to)| index[from] < index[to])
    }
}

/// Build the extended communicative event diagram of a process: its events
/// plus, transitively, every precedent event from any process.
pub fn extend_diagram(
    model: &RequirementsModel,
    process: &str,
) -> Result<ExtendedDiagram, OrderingError> {
    if model.process(process).is_none() {
        return Err(OrderingError::UnknownProcess(process.to_string()));
    }
    let all_edges = model.precedences();
    let mut incoming: BTreeMap<&str, Vec<&PrecedenceEdge>> = BTreeMap::new();
    for edge in &all_edges {
        incoming.entry(edge.to.as_str()).or_default().push(edge);
    }

    let mut events: BTreeSet<String> = model
        .events
        .iter()
        .filter(|e| e.process == process)
        .map(|e| e.id.clone())
        .collect();
    let mut queue: VecDeque<String> = events.iter().cloned().collect();
    while let Some(id) = queue.pop_front() {
        for edge in incoming.get(id.as_str()).into_iter().flatten() {
            if events.insert(edge.from.clone()) {
                queue.push_back(edge.from.clone());
            }
        }
    }

    let edges: Vec<PrecedenceEdge> = all_edges
        .iter()
        .filter(|e| events.contains(&e.to) && events.contains(&e.from))
        .cloned()
        .collect();
    let processes = model
        .events
        .iter()
        .filter(|e| events.contains(&e.id))
        .map(|e| (e.id.clone(), e.process.clone()))
        .collect();

    Ok(ExtendedDiagram { root_process: process.to_string(), events, edges, processes })
}

/// Treat the whole model as one diagram. Used when no process is selected.
pub fn whole_model_diagram(model: &RequirementsModel) -> ExtendedDiagram {
    let events: BTreeSet<String> = model.events.iter().map(|e| e.id.clone()).collect();
    ExtendedDiagram {
        root_process: String::new(),
        edges: model.precedences(),
        processes: model.events.iter().map(|e| (e.id.clone(), e.process.clone())).collect(),
        events,
    }
}

/// Remove the loopback-flagged edges. Errors when an unflagged cycle remains,
/// listing the events on it.
pub fn remove_loopbacks(diagram: &ExtendedDiagram) -> Result<EventPoset, OrderingError> {
    let mut order_edges = Vec::new();
    let mut removed = Vec::new();
    let mut seen = BTreeSet::new();
    for edge in &diagram.edges {
        if edge.loopback {
            removed.push(edge.clone());
        } else if seen.insert((edge.from.clone(), edge.to.clone())) {
            order_edges.push((edge.from.clone(), edge.to.clone()));
        }
    }

    let poset = EventPoset {
        events: diagram.events.clone(),
        order_edges,
        removed,
        processes: diagram.processes.clone(),
    };

    if let Some(cycle) = find_cycle(&poset) {
        return Err(OrderingError::UnflaggedCycle(cycle));
    }
    Ok(poset)
}

fn find_cycle(poset: &EventPoset) -> Option<Vec<String>> {
    let mut adjacency: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in &poset.events {
        adjacency.entry(e.as_str()).or_default();
    }
    for (from, to) in &poset.order_edges {
        adjacency.entry(from.as_str()).or_default().push(to.as_str());
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut marks: BTreeMap<&str, Mark> =
        adjacency.keys().map(|k| (*k, Mark::White)).collect();

    fn dfs<'a>(
        node: &'a str,
        adjacency: &BTreeMap<&'a str, Vec<&'a str>>,
        marks: &mut BTreeMap<&'a str, Mark>,
        stack: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        marks.insert(node, Mark::Grey);
        stack.push(node);
        for next in adjacency.get(node).into_iter().flatten() {
            match marks.get(next).copied().unwrap_or(Mark::White) {
                Mark::Grey => {
                    let start = stack.iter().position(|n| n == next).unwrap_or(0);
                    let mut cycle: Vec<String> =
                        stack[start..].iter().map(|s| s.to_string()).collect();
                    cycle.push(next.to_string());
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
        stack.pop();
        marks.insert(node, Mark::Black);
        None
    }

    let keys: Vec<&str> = adjacency.keys().copied().collect();
    for key in keys {
        if marks[key] == Mark::White {
            let mut stack = Vec::new();
            if let Some(c) = dfs(key, &adjacency, &mut marks, &mut stack) {
                return Some(c);
            }
        }
    }
    None
}

/// Kahn's algorithm with a deterministic tie-break: among the ready events,
/// the one with the smallest (process acronym, event id) is taken first, the
/// id compared naturally (SALE2 before SALE10).
pub fn topological_order(poset: &EventPoset) -> Vec<String> {
    #[derive(PartialEq, Eq)]
    struct Ready {
        key: (String, (String, u64, String)),
        id: String,
    }
    impl Ord for Ready {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            // Reverse: BinaryHeap is a max-heap, we want the smallest key.
            other.key.cmp(&self.key)
        }
    }
    impl PartialOrd for Ready {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }

    let mut in_degree: BTreeMap<&str, usize> =
        poset.events.iter().map(|e| (e.as_str(), 0)).collect();
    let mut successors: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (from, to) in &poset.order_edges {
        *in_degree.entry(to.as_str()).or_default() += 1;
        successors.entry(from.as_str()).or_default().push(to.as_str());
    }

    let ready_key = |id: &str| -> (String, (String, u64, String)) {
        let process = poset.processes.get(id).cloned().unwrap_or_default();
        (process, event_id_sort_key(id))
    };

    let mut heap: BinaryHeap<Ready> = in_degree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(id, _)| Ready { key: ready_key(id), id: id.to_string() })
        .collect();

    let mut out = Vec::with_capacity(poset.events.len());
    while let Some(Ready { id, .. }) = heap.pop() {
        for next in successors.get(id.as_str()).into_iter().flatten() {
            let d = in_degree.get_mut(next).expect("all events have a degree");
            *d -= 1;
            if *d == 0 {
                heap.push(Ready { key: ready_key(next), id: next.to_string() });
            }
        }
        out.push(id);
    }
    out
}

/// Convenience: extended diagram, poset and canonical order for a process (or
/// the whole model when `process` is `None`).
pub fn order_events(
    model: &RequirementsModel,
    process: Option<&str>,
) -> Result<(EventPoset, Vec<String>), OrderingError> {
    let diagram = match process {
        Some(p) => extend_diagram(model, p)?,
        None => whole_model_diagram(model),
    };
    let poset = remove_loopbacks(&diagram)?;
    let order = topological_order(&poset);
    Ok((poset, order))
}

/// Poset induced on a subset of events: the edges restricted to the subset.
/// Derivation uses this to compute canonical member ordering regardless of
/// the fold order it was given.
pub fn induced_poset(model: &RequirementsModel, events: &[String]) -> EventPoset {
    let set: BTreeSet<String> = events.iter().cloned().collect();
    let mut order_edges = Vec::new();
    let mut removed = Vec::new();
    let mut seen = BTreeSet::new();
    for edge in model.precedences() {
        if !set.contains(&edge.from) || !set.contains(&edge.to) {
            continue;
        }
        if edge.loopback {
            removed.push(edge);
        } else if seen.insert((edge.from.clone(), edge.to.clone())) {
            order_edges.push((edge.from.clone(), edge.to.clone()));
        }
    }
    EventPoset {
        events: set.clone(),
        order_edges,
        removed,
        processes: model
            .events
            .iter()
            .filter(|e| set.contains(&e.id))
            .map(|e| (e.id.clone(), e.process.clone()))
            .collect(),
    }
}

/// Build a tiny poset by hand; used by tests.
pub fn poset_from_edges(
    events: &[(&str, &str)],
    edges: &[(&str, &str)],
) -> EventPoset {
    EventPoset {
        events: events.iter().map(|(id, _)| id.to_string()).collect(),
        order_edges: edges
            .iter()
            .map(|(f, t)| (f.to_string(), t.to_string()))
            .collect(),
        removed: Vec::new(),
        processes: events
            .iter()
            .map(|(id, p)| (id.to_string(), p.to_string()))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_poset_orders_to_empty_list() {
        let poset = poset_from_edges(&[], &[]);
        assert!(topological_order(&poset).is_empty());
    }

    #[test]
    fn order_respects_edges_and_tiebreak() {
        let poset = poset_from_edges(
            &[("B2", "P"), ("A1", "P"), ("C3", "Q")],
            &[("C3", "A1")],
        );
        let order = topological_order(&poset);
        assert_eq!(order, vec!["B2", "C3", "A1"]);
        assert!(poset.is_linear_extension(&order));
    }

    #[test]
    fn natural_id_tiebreak() {
        let poset = poset_from_edges(&[("E10", "P"), ("E2", "P")], &[]);
        assert_eq!(topological_order(&poset), vec!["E2", "E10"]);
    }

    #[test]
    fn sources_are_start_attached_events() {
        let poset = poset_from_edges(
            &[("A", "P"), ("B", "P"), ("C", "P")],
            &[("A", "B"), ("B", "C")],
        );
        assert_eq!(poset.sources(), vec!["A"]);
    }

    #[test]
    fn linear_extension_check_rejects_violations() {
        let poset = poset_from_edges(&[("A", "P"), ("B", "P")], &[("A", "B")]);
        assert!(poset.is_linear_extension(&["A".into(), "B".into()]));
        assert!(!poset.is_linear_extension(&["B".into(), "A".into()]));
        assert!(!poset.is_linear_extension(&["A".into()]));
    }
}
