//! Protocol behavior expressions, stream semantics and a trace oracle that
//! works directly on the expressions (no Petri nets involved).

mod oracle;
mod stream;

pub use oracle::{enumerate_traces, enumerate_traces_with, OracleError, OracleOptions, Trace, Traces, Valuation};
pub use stream::{stream_flatten, valid_successors, Nested, StreamError};

use crate::ahcl::{Ident, Span};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    /// `!`
    Send,
    /// `?`
    Recv,
}

impl Polarity {
    pub fn symbol(self) -> char {
        match self {
            Polarity::Send => '!',
            Polarity::Recv => '?',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Conjunction {
    /// Written `<a & b>`: all members must agree.
    pub bracketed: bool,
    pub ports: Vec<Ident>,
}

/// Disjunctive normal form over stream ports.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StreamPredicate {
    pub disjuncts: Vec<Conjunction>,
    pub span: Span,
}

impl StreamPredicate {
    pub fn var(port: &str) -> Self {
        StreamPredicate {
            disjuncts: vec![Conjunction { bracketed: false, ports: vec![Ident::new(port)] }],
            span: Span::default(),
        }
    }

    pub fn synced(ports: &[&str]) -> Self {
        StreamPredicate {
            disjuncts: vec![Conjunction { bracketed: true, ports: ports.iter().map(|p| Ident::new(*p)).collect() }],
            span: Span::default(),
        }
    }

    pub fn ports(&self) -> impl Iterator<Item = &Ident> {
        self.disjuncts.iter().flat_map(|c| c.ports.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub enum Action {
    #[default]
    Skip,
    Seq(Vec<Action>),
    Par(Vec<Action>),
    Alt(Vec<Action>),
    RepeatUntil(Box<Action>, StreamPredicate),
    RepeatCounter(Box<Action>, u32, Span),
    RepeatForever(Box<Action>),
    If(StreamPredicate, Box<Action>, Box<Action>),
    Signal(Ident),
    Wait(Ident),
    Activate(Ident, Polarity),
    Do(Ident),
}

impl Action {
    pub fn send(p: &str) -> Self {
        Action::Activate(Ident::new(p), Polarity::Send)
    }

    pub fn recv(p: &str) -> Self {
        Action::Activate(Ident::new(p), Polarity::Recv)
    }

    pub fn counter(body: Action, n: u32) -> Self {
        Action::RepeatCounter(Box::new(body), n, Span::default())
    }

    pub fn until(body: Action, p: StreamPredicate) -> Self {
        Action::RepeatUntil(Box::new(body), p)
    }

    pub fn forever(body: Action) -> Self {
        Action::RepeatForever(Box::new(body))
    }

    pub fn cond(p: StreamPredicate, then: Action, other: Action) -> Self {
        Action::If(p, Box::new(then), Box::new(other))
    }

    pub fn children(&self) -> Vec<&Action> {
        match self {
            Action::Seq(v) | Action::Par(v) | Action::Alt(v) => v.iter().collect(),
            Action::RepeatUntil(b, _) | Action::RepeatCounter(b, _, _) | Action::RepeatForever(b) => vec![b],
            Action::If(_, a, b) => vec![a, b],
            _ => vec![],
        }
    }

    /// Calls `f` on every node in pre-order with the number of enclosing
    /// repeat-until/if nodes.
    pub fn walk_with_depth<'a>(&'a self, f: &mut impl FnMut(&'a Action, u32)) {
        fn go<'a>(a: &'a Action, d: u32, f: &mut impl FnMut(&'a Action, u32)) {
            f(a, d);
            let inner = match a {
                Action::RepeatUntil(..) | Action::If(..) => d + 1,
                _ => d,
            };
            for c in a.children() {
                go(c, inner, f);
            }
        }
        go(self, 0, f)
    }
}

/// Kind of a transmitted stream element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StreamKind {
    Data,
    /// End of a stream at the given nesting level; level 0 ends the whole stream.
    Eos(u32),
}

impl StreamKind {
    /// Flag index used by the net encoding: `Eos(i)` is `i`, Data is `n`.
    pub fn flag_index(self, n: u32) -> u32 {
        match self {
            StreamKind::Data => n,
            StreamKind::Eos(i) => i,
        }
    }

    pub fn from_flag_index(i: u32, n: u32) -> Self {
        if i >= n {
            StreamKind::Data
        } else {
            StreamKind::Eos(i)
        }
    }

    /// Every kind a port of nesting factor `n` can carry.
    pub fn all(n: u32) -> Vec<StreamKind> {
        let mut v = vec![StreamKind::Data];
        v.extend((0..n).map(StreamKind::Eos));
        v
    }
}

impl fmt::Display for StreamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StreamKind::Data => f.write_str("DATA"),
            StreamKind::Eos(i) => write!(f, "EOS{i}"),
        }
    }
}

impl FromStr for StreamKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim().to_ascii_uppercase();
        if t == "DATA" {
            return Ok(StreamKind::Data);
        }
        t.strip_prefix("EOS")
            .map(|r| r.trim())
            .and_then(|r| r.parse().ok())
            .map(StreamKind::Eos)
            .ok_or_else(|| format!("not a stream kind: {s}"))
    }
}

impl Serialize for StreamKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StreamKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TriBool {
    True,
    False,
    Fail,
}

/// What a never-activated port contributes to a predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeverActivated {
    #[default]
    False,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PredicateError {
    #[error("unknown port `{0}` in stream predicate")]
    UnknownPort(String),
}

/// A variable is true iff its port last carried `Eos(i)` with `i <= d`.
pub fn variable_value(last: Option<StreamKind>, d: u32) -> Option<bool> {
    match last? {
        StreamKind::Data => Some(false),
        StreamKind::Eos(i) => Some(i <= d),
    }
}

/// Three-valued predicate evaluation. `last` maps every port in scope to
/// the kind it last transmitted (`None` if never activated).
pub fn evaluate_stream_predicate(
    p: &StreamPredicate,
    last: &BTreeMap<String, Option<StreamKind>>,
    d: u32,
    never: NeverActivated,
) -> Result<TriBool, PredicateError> {
    let mut values = Vec::with_capacity(p.disjuncts.len());
    let mut unset = false;
    for c in &p.disjuncts {
        let mut vs = Vec::with_capacity(c.ports.len());
        for port in &c.ports {
            let kind = last.get(&port.name).ok_or_else(|| PredicateError::UnknownPort(port.name.clone()))?;
            match variable_value(*kind, d) {
                Some(v) => vs.push(v),
                None => {
                    unset = true;
                    vs.push(false)
                }
            }
        }
        values.push((c.bracketed, vs));
    }
    if unset && never == NeverActivated::Fail {
        return Ok(TriBool::Fail);
    }
    if values.iter().any(|(_, vs)| vs.iter().all(|&v| v)) {
        return Ok(TriBool::True);
    }
    let mixed = values.iter().any(|(b, vs)| *b && vs.iter().any(|&v| v) && vs.iter().any(|&v| !v));
    Ok(if mixed { TriBool::Fail } else { TriBool::False })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last(pairs: &[(&str, StreamKind)]) -> BTreeMap<String, Option<StreamKind>> {
        pairs.iter().map(|(p, k)| (p.to_string(), Some(*k))).collect()
    }

    #[test]
    fn data_is_false() {
        let r = evaluate_stream_predicate(
            &StreamPredicate::var("p"),
            &last(&[("p", StreamKind::Data)]),
            0,
            NeverActivated::False,
        );
        assert_eq!(r, Ok(TriBool::False));
    }

    #[test]
    fn bracketed_agreement() {
        use StreamKind::*;
        let p = StreamPredicate::synced(&["a", "b"]);
        let ev = |a, b| evaluate_stream_predicate(&p, &last(&[("a", a), ("b", b)]), 0, NeverActivated::False).unwrap();
        assert_eq!(ev(Eos(0), Eos(0)), TriBool::True);
        assert_eq!(ev(Eos(0), Data), TriBool::Fail);
        assert_eq!(ev(Data, Data), TriBool::False);
    }

    #[test]
    fn deeper_terminators_count_inside_loops() {
        use StreamKind::*;
        let p = StreamPredicate::var("a");
        let ev = |k, d| evaluate_stream_predicate(&p, &last(&[("a", k)]), d, NeverActivated::False).unwrap();
        assert_eq!(ev(Eos(1), 0), TriBool::False);
        assert_eq!(ev(Eos(1), 1), TriBool::True);
        assert_eq!(ev(Eos(0), 1), TriBool::True);
    }

    #[test]
    fn unknown_and_unset_ports() {
        let p = StreamPredicate::var("z");
        assert_eq!(
            evaluate_stream_predicate(&p, &BTreeMap::new(), 0, NeverActivated::False),
            Err(PredicateError::UnknownPort("z".into()))
        );
        let m: BTreeMap<_, _> = [("z".to_string(), None)].into();
        assert_eq!(evaluate_stream_predicate(&p, &m, 0, NeverActivated::False), Ok(TriBool::False));
        assert_eq!(evaluate_stream_predicate(&p, &m, 0, NeverActivated::Fail), Ok(TriBool::Fail));
    }

    #[test]
    fn kind_text() {
        assert_eq!("EOS2".parse::<StreamKind>(), Ok(StreamKind::Eos(2)));
        assert_eq!(StreamKind::Data.to_string(), "DATA");
        assert!("EOSx".parse::<StreamKind>().is_err());
    }
}
