//! Exchange formats: PNML for external Petri net tools, DOT for pictures
//! and versioned JSON reports.

mod pnml;

pub use crate::petri::{net_to_dot, reach_to_dot};
pub use pnml::{export_pnml, import_pnml, PTNET_TYPE};

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InteropError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("invalid PNML: {0}")]
    Invalid(String),
    #[error("unsupported net type `{0}`")]
    UnsupportedNetType(String),
    #[error("node `{0}` has no element id")]
    InvalidId(String),
}

/// Wraps a report as `{"schema": 1, "kind": .., ...fields}`.
pub fn json_report<T: Serialize>(kind: &str, body: &T) -> serde_json::Value {
    let mut v = serde_json::json!({ "schema": crate::analyze::SCHEMA_VERSION, "kind": kind });
    match serde_json::to_value(body).expect("reports serialize") {
        serde_json::Value::Object(m) => v.as_object_mut().unwrap().extend(m),
        other => {
            v["data"] = other;
        }
    }
    v
}

#[cfg(test)]
mod tests;

/// Checks that `b` is `a` up to renaming, using ids (place names and
/// transition ids survive a PNML round trip) as the candidate bijection.
/// Labels, arc weights, the initial marking and the final predicate must
/// agree under it. Returns the first difference.
pub fn isomorphic_by_id(a: &crate::petri::InterlacedNet, b: &crate::petri::InterlacedNet) -> Result<(), String> {
    use std::collections::BTreeSet;
    let pa: BTreeSet<_> = a.places.keys().collect();
    let pb: BTreeSet<_> = b.places.keys().collect();
    if pa != pb {
        return Err(format!("place sets differ: {:?}", pa.symmetric_difference(&pb).take(3).collect::<Vec<_>>()));
    }
    let ta: BTreeSet<_> = a.transitions.keys().collect();
    let tb: BTreeSet<_> = b.transitions.keys().collect();
    if ta != tb {
        return Err(format!("transition sets differ: {:?}", ta.symmetric_difference(&tb).take(3).collect::<Vec<_>>()));
    }
    for (id, t) in &a.transitions {
        if b.transitions[id].label != t.label {
            return Err(format!("label of {id}: {:?} vs {:?}", t.label, b.transitions[id].label));
        }
    }
    let arcs = |n: &crate::petri::InterlacedNet| n.arcs.iter().map(|(k, w)| (k.clone(), *w)).collect::<BTreeSet<_>>();
    let (aa, ab) = (arcs(a), arcs(b));
    if aa != ab {
        return Err(format!("arcs differ: {:?}", aa.symmetric_difference(&ab).take(3).collect::<Vec<_>>()));
    }
    let m0 = |n: &crate::petri::InterlacedNet| {
        n.initial.iter().filter(|e| *e.1 > 0).map(|(p, k)| (p.clone(), *k)).collect::<Vec<_>>()
    };
    if m0(a) != m0(b) {
        return Err("initial markings differ".into());
    }
    if a.final_predicate != b.final_predicate {
        return Err("final predicates differ".into());
    }
    Ok(())
}
