//! Interlaced labelled place/transition nets.
//!
//! A net is built from slices. Slices are glued with [`InterlacedNet::union`]
//! and then quotiented by [`InterlacedNet::unfold`], which identifies nodes of
//! the same sort whose qualifier sets intersect.

mod dot;
mod language;
mod reach;
mod stubborn;
mod token;
mod unfold;

pub use dot::{net_to_dot, reach_to_dot};
pub use language::{net_language, terminal_language, Word};
pub use reach::{
    reachability_graph, reachability_graph_seq, reduced_reachability_graph, Limits, ReachGraph, ReachStats,
};
pub use token::{CompiledNet, Marking};
pub use unfold::NetExpr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Atom {
    Int(i64),
    Str(String),
}

impl From<&str> for Atom {
    fn from(s: &str) -> Self {
        Atom::Str(s.to_string())
    }
}

impl From<String> for Atom {
    fn from(s: String) -> Self {
        Atom::Str(s)
    }
}

impl From<i64> for Atom {
    fn from(v: i64) -> Self {
        Atom::Int(v)
    }
}

impl From<usize> for Atom {
    fn from(v: usize) -> Self {
        Atom::Int(v as i64)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Int(v) => write!(f, "{v}"),
            Atom::Str(s) => f.write_str(s),
        }
    }
}

/// A qualifier is a tuple of atoms; two nodes meet when they share one.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Qualifier(pub Vec<Atom>);

impl fmt::Display for Qualifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// `q!["port", name, "prepared"]` builds a qualifier from anything that converts to [`Atom`].
#[macro_export]
macro_rules! q {
    ($($a:expr),* $(,)?) => {
        $crate::petri::Qualifier(vec![$($crate::petri::Atom::from($a)),*])
    };
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Place {
    pub id: String,
    pub qualifiers: BTreeSet<Qualifier>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub id: String,
    pub qualifiers: BTreeSet<Qualifier>,
    /// `None` is the silent label λ.
    pub label: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArcDir {
    /// place → transition (input arc of the transition)
    In,
    /// transition → place (output arc)
    Out,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArcKey {
    pub place: String,
    pub transition: String,
    pub dir: ArcDir,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cmp {
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FinalAtom {
    pub place: String,
    pub cmp: Cmp,
    pub count: u32,
}

/// Conjunction of `place = k` / `place >= k` atoms.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FinalPredicate {
    pub atoms: Vec<FinalAtom>,
}

impl FinalPredicate {
    pub fn at_least(place: impl Into<String>, count: u32) -> Self {
        FinalPredicate { atoms: vec![FinalAtom { place: place.into(), cmp: Cmp::Ge, count }] }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum NetError {
    #[error("transition `{id}` carries conflicting labels `{a}` and `{b}`")]
    LabelConflict { id: String, a: String, b: String },
    #[error("arc {place} / {transition} has conflicting weights {a} and {b}")]
    ArcConflict { place: String, transition: String, a: u32, b: u32 },
    #[error("place `{place}` and transition `{transition}` share qualifier {qualifier}")]
    SortClash { place: String, transition: String, qualifier: String },
    #[error("`{0}` is used both as a place and as a transition")]
    IdClash(String),
    #[error("arc refers to unknown node `{0}`")]
    DanglingArc(String),
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
    #[error("transition `{0}` is not enabled")]
    NotEnabled(String),
    #[error("net has no final-marking predicate")]
    NoFinalMarking,
    #[error("arc weight must be at least 1")]
    ZeroWeight,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InterlacedNet {
    pub places: IndexMap<String, Place>,
    pub transitions: IndexMap<String, Transition>,
    pub arcs: IndexMap<ArcKey, u32>,
    pub initial: BTreeMap<String, u32>,
    pub final_predicate: Option<FinalPredicate>,
}

impl InterlacedNet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a place, or extends the qualifiers of an existing one.
    pub fn place(&mut self, id: impl Into<String>, quals: impl IntoIterator<Item = Qualifier>) -> String {
        let id = id.into();
        let entry =
            self.places.entry(id.clone()).or_insert_with(|| Place { id: id.clone(), qualifiers: BTreeSet::new() });
        entry.qualifiers.extend(quals);
        id
    }

    pub fn transition(
        &mut self,
        id: impl Into<String>,
        label: Option<String>,
        quals: impl IntoIterator<Item = Qualifier>,
    ) -> String {
        let id = id.into();
        let entry = self.transitions.entry(id.clone()).or_insert_with(|| Transition {
            id: id.clone(),
            qualifiers: BTreeSet::new(),
            label: None,
        });
        if entry.label.is_none() {
            entry.label = label;
        }
        entry.qualifiers.extend(quals);
        id
    }

    /// Input arc `place -> transition`. Repeated calls accumulate weight.
    pub fn arc_in(&mut self, place: &str, transition: &str, weight: u32) {
        let key = ArcKey { place: place.into(), transition: transition.into(), dir: ArcDir::In };
        *self.arcs.entry(key).or_insert(0) += weight;
    }

    /// Output arc `transition -> place`.
    pub fn arc_out(&mut self, transition: &str, place: &str, weight: u32) {
        let key = ArcKey { place: place.into(), transition: transition.into(), dir: ArcDir::Out };
        *self.arcs.entry(key).or_insert(0) += weight;
    }

    /// Take-and-return pair: `transition` tests `place` without consuming it.
    pub fn read_arc(&mut self, place: &str, transition: &str) {
        self.arc_in(place, transition, 1);
        self.arc_out(transition, place, 1);
    }

    pub fn mark(&mut self, place: &str, count: u32) {
        *self.initial.entry(place.to_string()).or_insert(0) += count;
    }

    pub fn weight(&self, place: &str, transition: &str, dir: ArcDir) -> u32 {
        let key = ArcKey { place: place.into(), transition: transition.into(), dir };
        self.arcs.get(&key).copied().unwrap_or(0)
    }

    pub fn initial_of(&self, place: &str) -> u32 {
        self.initial.get(place).copied().unwrap_or(0)
    }

    /// Checks structural well-formedness: disjoint ids, arcs between existing
    /// nodes, positive weights.
    pub fn check(&self) -> Result<(), NetError> {
        for id in self.places.keys() {
            if self.transitions.contains_key(id) {
                return Err(NetError::IdClash(id.clone()));
            }
        }
        for (k, w) in &self.arcs {
            if *w == 0 {
                return Err(NetError::ZeroWeight);
            }
            if !self.places.contains_key(&k.place) {
                return Err(NetError::DanglingArc(k.place.clone()));
            }
            if !self.transitions.contains_key(&k.transition) {
                return Err(NetError::DanglingArc(k.transition.clone()));
            }
        }
        for p in self.initial.keys() {
            if !self.places.contains_key(p) {
                return Err(NetError::UnknownPlace(p.clone()));
            }
        }
        Ok(())
    }

    /// Componentwise union. Initial markings of shared places add up; arcs
    /// present in both operands must agree on their weight.
    pub fn union(&self, other: &InterlacedNet) -> Result<InterlacedNet, NetError> {
        let mut out = self.clone();
        for p in other.places.values() {
            out.place(p.id.clone(), p.qualifiers.iter().cloned());
        }
        for t in other.transitions.values() {
            if let Some(existing) = out.transitions.get(&t.id) {
                if let (Some(a), Some(b)) = (&existing.label, &t.label) {
                    if a != b {
                        return Err(NetError::LabelConflict { id: t.id.clone(), a: a.clone(), b: b.clone() });
                    }
                }
            }
            out.transition(t.id.clone(), t.label.clone(), t.qualifiers.iter().cloned());
        }
        for (k, w) in &other.arcs {
            match out.arcs.get(k) {
                Some(existing) if existing != w => {
                    return Err(NetError::ArcConflict {
                        place: k.place.clone(),
                        transition: k.transition.clone(),
                        a: *existing,
                        b: *w,
                    })
                }
                Some(_) => {}
                None => {
                    out.arcs.insert(k.clone(), *w);
                }
            }
        }
        for (p, c) in &other.initial {
            *out.initial.entry(p.clone()).or_insert(0) += c;
        }
        out.final_predicate = match (&self.final_predicate, &other.final_predicate) {
            (None, None) => None,
            (Some(a), None) => Some(a.clone()),
            (None, Some(b)) => Some(b.clone()),
            (Some(a), Some(b)) => {
                let mut atoms = a.atoms.clone();
                for atom in &b.atoms {
                    if !atoms.contains(atom) {
                        atoms.push(atom.clone());
                    }
                }
                Some(FinalPredicate { atoms })
            }
        };
        Ok(out)
    }

    pub fn compile(&self) -> Result<CompiledNet, NetError> {
        CompiledNet::new(self)
    }

    /// Transitions in `self` fed by `place`, with the arc weight.
    pub fn consumers<'a>(&'a self, place: &'a str) -> impl Iterator<Item = (&'a str, u32)> + 'a {
        self.arcs
            .iter()
            .filter(move |(k, _)| k.dir == ArcDir::In && k.place == place)
            .map(|(k, w)| (k.transition.as_str(), *w))
    }

    pub fn producers<'a>(&'a self, place: &'a str) -> impl Iterator<Item = (&'a str, u32)> + 'a {
        self.arcs
            .iter()
            .filter(move |(k, _)| k.dir == ArcDir::Out && k.place == place)
            .map(|(k, w)| (k.transition.as_str(), *w))
    }

    pub fn inputs<'a>(&'a self, transition: &'a str) -> impl Iterator<Item = (&'a str, u32)> + 'a {
        self.arcs
            .iter()
            .filter(move |(k, _)| k.dir == ArcDir::In && k.transition == transition)
            .map(|(k, w)| (k.place.as_str(), *w))
    }

    pub fn outputs<'a>(&'a self, transition: &'a str) -> impl Iterator<Item = (&'a str, u32)> + 'a {
        self.arcs
            .iter()
            .filter(move |(k, _)| k.dir == ArcDir::Out && k.transition == transition)
            .map(|(k, w)| (k.place.as_str(), *w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple(p: &str, t: &str, q: &str) -> InterlacedNet {
        let mut n = InterlacedNet::new();
        n.place(p, []);
        n.place(q, []);
        n.transition(t, Some("a".into()), []);
        n.arc_in(p, t, 1);
        n.arc_out(t, q, 1);
        n.mark(p, 1);
        n
    }

    #[test]
    fn union_with_empty_is_identity() {
        let a = simple("p", "t", "q");
        assert_eq!(a.union(&InterlacedNet::new()).unwrap(), a);
    }

    #[test]
    fn union_sums_initial_marking() {
        let a = simple("p", "t", "q");
        let b = simple("p", "t", "q");
        let u = a.union(&b).unwrap();
        assert_eq!(u.initial_of("p"), 2);
        assert_eq!(u.arcs.len(), 2);
    }

    #[test]
    fn union_keeps_distinct_qualified_places() {
        let mut a = InterlacedNet::new();
        a.place("x", [q!["chan", "c", "free"]]);
        let mut b = InterlacedNet::new();
        b.place("y", [q!["chan", "c", "free"]]);
        assert_eq!(a.union(&b).unwrap().places.len(), 2);
    }

    #[test]
    fn label_conflict() {
        let mut a = InterlacedNet::new();
        a.transition("t", Some("a!".into()), []);
        let mut b = InterlacedNet::new();
        b.transition("t", Some("b!".into()), []);
        assert!(matches!(a.union(&b), Err(NetError::LabelConflict { .. })));
    }
}
