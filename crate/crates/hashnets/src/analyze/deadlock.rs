use super::AnalysisError;
use crate::petri::{CompiledNet, InterlacedNet, ReachGraph};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

/// Dead markings of a graph: no transition enabled and the final predicate
/// false. Nodes are in BFS order, so `witness` paths are shortest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeadlockReport {
    pub dead: Vec<usize>,
    /// Dead markings that satisfy the final predicate (proper termination).
    pub terminated: usize,
    pub states: usize,
    pub truncated: bool,
}

impl DeadlockReport {
    pub fn is_empty(&self) -> bool {
        self.dead.is_empty()
    }

    /// Firing sequence from the initial marking to the `k`-th dead marking.
    pub fn witness(&self, net: &CompiledNet, g: &ReachGraph, k: usize) -> Vec<String> {
        g.path_to(self.dead[k]).into_iter().map(|t| net.transitions[t].clone()).collect()
    }
}

/// Every explored dead marking that is not final. A net without a final
/// predicate treats every dead marking as a deadlock.
pub fn find_deadlocks(net: &CompiledNet, g: &ReachGraph) -> DeadlockReport {
    let flags: Vec<Option<bool>> = (0..g.len())
        .into_par_iter()
        .map(|i| {
            if g.is_expanded(i) && !g.successors(i).is_empty() {
                return None;
            }
            let m = g.marking(i);
            if net.enabled_transitions(&m).next().is_some() {
                return None;
            }
            Some(net.is_final(&m).unwrap_or(false))
        })
        .collect();
    let dead = flags.iter().enumerate().filter(|(_, f)| **f == Some(false)).map(|(i, _)| i).collect();
    let terminated = flags.iter().filter(|f| **f == Some(true)).count();
    DeadlockReport { dead, terminated, states: g.len(), truncated: g.truncated }
}

/// A linear invariant `Σ M(p) = expected` over a set of places.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlaceSum {
    pub name: String,
    pub places: Vec<String>,
    pub expected: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InvariantViolation {
    pub sum: String,
    pub node: usize,
    pub value: u64,
    pub marking: Vec<(String, u32)>,
    pub path: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InvariantReport {
    pub sums: usize,
    pub states: usize,
    pub truncated: bool,
    /// First violation in BFS order.
    pub violation: Option<InvariantViolation>,
}

impl InvariantReport {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

pub fn check_place_invariants(
    net: &CompiledNet,
    g: &ReachGraph,
    sums: &[PlaceSum],
) -> Result<InvariantReport, AnalysisError> {
    let idx: Vec<Vec<usize>> = sums
        .iter()
        .map(|s| {
            s.places
                .iter()
                .map(|p| net.place_index(p).ok_or_else(|| AnalysisError::UnknownPlace(p.clone())))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let first = (0..g.len()).into_par_iter().find_first(|&i| {
        let m = g.marking(i);
        idx.iter().zip(sums).any(|(ps, s)| ps.iter().map(|&p| u64::from(m.get(p))).sum::<u64>() != s.expected)
    });
    let violation = first.map(|i| {
        let m = g.marking(i);
        let (ps, s) = idx
            .iter()
            .zip(sums)
            .find(|(ps, s)| ps.iter().map(|&p| u64::from(m.get(p))).sum::<u64>() != s.expected)
            .unwrap();
        InvariantViolation {
            sum: s.name.clone(),
            node: i,
            value: ps.iter().map(|&p| u64::from(m.get(p))).sum(),
            marking: net.describe(&m),
            path: g.path_to(i).into_iter().map(|t| net.transitions[t].clone()).collect(),
        }
    });
    Ok(InvariantReport { sums: sums.len(), states: g.len(), truncated: g.truncated, violation })
}

/// The stream protocol's invariants for every flag-carrying entity of a
/// translated net: the flags of an entity sum to one, and so does each
/// flag with its dual.
pub fn stream_invariants(net: &InterlacedNet) -> Vec<PlaceSum> {
    let mut levels: BTreeMap<String, BTreeMap<u32, (Option<String>, Option<String>)>> = BTreeMap::new();
    for p in net.places.values() {
        for q in &p.qualifiers {
            let [crate::petri::Atom::Str(s)] = q.0.as_slice() else { continue };
            let (dual, rest) = if let Some(r) = s.strip_prefix("stream_port_flag_dual[") {
                (true, r)
            } else if let Some(r) = s.strip_prefix("stream_port_flag[") {
                (false, r)
            } else {
                continue;
            };
            let Some((entity, level)) = rest.strip_suffix(']').and_then(|r| r.rsplit_once(',')) else { continue };
            let Ok(level) = level.parse::<u32>() else { continue };
            let slot = levels.entry(entity.to_string()).or_default().entry(level).or_default();
            if dual {
                slot.1 = Some(p.id.clone());
            } else {
                slot.0 = Some(p.id.clone());
            }
        }
    }
    let mut out = Vec::new();
    for (e, ls) in levels {
        let flags: Vec<String> = ls.values().filter_map(|l| l.0.clone()).collect();
        out.push(PlaceSum { name: format!("flags[{e}]"), places: flags, expected: 1 });
        for (i, (f, d)) in ls {
            if let (Some(f), Some(d)) = (f, d) {
                out.push(PlaceSum { name: format!("flag_dual[{e},{i}]"), places: vec![f, d], expected: 1 });
            }
        }
    }
    out
}
