//! Small-step interpreter for protocols. Enumerates activation traces by
//! breadth-first search over (residual term, semaphores, stream state, trace).

use super::{
    evaluate_stream_predicate, valid_successors, Action, NeverActivated, PredicateError, StreamKind, StreamPredicate,
    TriBool,
};
use crate::ahcl::{Direction, Unit};
use rustc_hash::{FxHashMap, FxHashSet};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::hash::{Hash, Hasher};

pub type Trace = Vec<String>;

/// How stream predicates get their truth values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Valuation {
    /// Every repeat-until/if decision is a free choice.
    Free,
    /// Each activation of a stream port consumes the next kind of its script.
    Scripted(BTreeMap<String, Vec<StreamKind>>),
    /// Every activation may carry any kind; with `order_consistency`,
    /// outputs only emit kinds allowed after the previous one.
    FreeKinds { order_consistency: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleOptions {
    pub max_states: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { max_states: 2_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Traces {
    /// Traces after which the protocol has finished with balanced semaphores.
    pub complete: BTreeSet<Trace>,
    /// Every trace of a reachable configuration (prefix-closed).
    pub prefixes: BTreeSet<Trace>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("predicate consulted port `{0}` past the end of its script")]
    ScriptExhausted(String),
    #[error(transparent)]
    Predicate(#[from] PredicateError),
    #[error("undeclared semaphore `{0}`")]
    UnknownSemaphore(String),
    #[error("more than {0} configurations")]
    StateLimit(usize),
}

#[derive(Clone, Copy, Debug)]
struct P<'a>(&'a Action);

impl PartialEq for P<'_> {
    fn eq(&self, o: &Self) -> bool {
        std::ptr::eq(self.0, o.0)
    }
}

impl Eq for P<'_> {}

impl Hash for P<'_> {
    fn hash<H: Hasher>(&self, h: &mut H) {
        std::ptr::hash(self.0, h)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
enum T<'a> {
    Nil,
    /// Failed predicate or order violation; never finishes.
    Stuck,
    Start(P<'a>),
    Seq(P<'a>, usize, Box<T<'a>>),
    Par(Vec<T<'a>>),
    /// Repeat node, iterations started, running body.
    Loop(P<'a>, u32, Box<T<'a>>),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
struct G {
    sems: Vec<u32>,
    last: Vec<Option<StreamKind>>,
    pos: Vec<usize>,
    exhausted: Vec<bool>,
}

struct Entity {
    name: String,
    nesting: u32,
    output: bool,
}

struct Ctx<'a> {
    valuation: &'a Valuation,
    sems: FxHashMap<&'a str, usize>,
    entities: Vec<Entity>,
    entity_of: FxHashMap<&'a str, usize>,
    depth: FxHashMap<*const Action, u32>,
}

type Step<'a> = (Option<String>, T<'a>, G);

impl<'a> Ctx<'a> {
    fn norm(&self, t: T<'a>) -> T<'a> {
        match t {
            T::Start(p) => match p.0 {
                Action::Skip => T::Nil,
                Action::Seq(v) if v.is_empty() => T::Nil,
                Action::Seq(v) => self.norm(T::Seq(p, 0, Box::new(self.norm(T::Start(P(&v[0])))))),
                Action::Par(v) => self.norm(T::Par(v.iter().map(|a| self.norm(T::Start(P(a)))).collect())),
                Action::RepeatUntil(b, _) | Action::RepeatForever(b) => {
                    T::Loop(p, 0, Box::new(self.norm(T::Start(P(b)))))
                }
                Action::RepeatCounter(b, _, _) => T::Loop(p, 1, Box::new(self.norm(T::Start(P(b))))),
                _ => T::Start(p),
            },
            T::Seq(p, i, c) if *c == T::Nil => match p.0 {
                Action::Seq(v) if i + 1 < v.len() => {
                    self.norm(T::Seq(p, i + 1, Box::new(self.norm(T::Start(P(&v[i + 1]))))))
                }
                _ => T::Nil,
            },
            T::Par(cs) if cs.iter().all(|c| *c == T::Nil) => T::Nil,
            t => t,
        }
    }

    fn sem(&self, id: &str) -> Result<usize, OracleError> {
        self.sems.get(id).copied().ok_or_else(|| OracleError::UnknownSemaphore(id.to_string()))
    }

    /// Possible truth values of `pred` at the node `at`.
    fn decide(&self, at: &Action, pred: &StreamPredicate, g: &G) -> Result<Vec<TriBool>, OracleError> {
        if *self.valuation == Valuation::Free {
            return Ok(vec![TriBool::True, TriBool::False]);
        }
        let mut last = BTreeMap::new();
        for (i, e) in self.entities.iter().enumerate() {
            last.insert(e.name.clone(), g.last[i]);
        }
        for port in pred.ports() {
            if let Some(&i) = self.entity_of.get(port.name.as_str()) {
                if g.exhausted[i] {
                    return Err(OracleError::ScriptExhausted(port.name.clone()));
                }
            }
        }
        let d = self.depth[&(at as *const Action)];
        Ok(vec![evaluate_stream_predicate(pred, &last, d, NeverActivated::False)?])
    }

    /// Stream states after one activation of `name`.
    fn transmit(&self, name: &str, g: &G) -> Vec<G> {
        let Some(&i) = self.entity_of.get(name) else {
            return vec![g.clone()];
        };
        let e = &self.entities[i];
        if e.nesting == 0 {
            return vec![g.clone()];
        }
        match self.valuation {
            Valuation::Free => vec![g.clone()],
            Valuation::Scripted(scripts) => {
                let mut h = g.clone();
                match scripts.get(&e.name).and_then(|s| s.get(g.pos[i])) {
                    Some(k) => {
                        h.last[i] = Some(*k);
                        h.pos[i] += 1;
                    }
                    None => {
                        h.last[i] = None;
                        h.exhausted[i] = true;
                    }
                }
                vec![h]
            }
            Valuation::FreeKinds { order_consistency } => {
                let kinds: Vec<StreamKind> = match (g.last[i], *order_consistency && e.output) {
                    (Some(k), true) => valid_successors(k, e.nesting).into_iter().collect(),
                    _ => StreamKind::all(e.nesting),
                };
                kinds
                    .into_iter()
                    .map(|k| {
                        let mut h = g.clone();
                        h.last[i] = Some(k);
                        h
                    })
                    .collect()
            }
        }
    }

    fn branch(&self, v: TriBool, on_true: T<'a>, on_false: T<'a>) -> T<'a> {
        match v {
            TriBool::True => on_true,
            TriBool::False => on_false,
            TriBool::Fail => T::Stuck,
        }
    }

    fn steps(&self, t: &T<'a>, g: &G) -> Result<Vec<Step<'a>>, OracleError> {
        let mut out = Vec::new();
        match t {
            T::Nil | T::Stuck => {}
            T::Start(p) => match p.0 {
                Action::Alt(v) => {
                    for b in v {
                        out.push((None, self.norm(T::Start(P(b))), g.clone()));
                    }
                }
                Action::If(pred, a, b) => {
                    for v in self.decide(p.0, pred, g)? {
                        let next = self.branch(v, self.norm(T::Start(P(a))), self.norm(T::Start(P(b))));
                        out.push((None, next, g.clone()));
                    }
                }
                Action::Signal(s) => {
                    let mut h = g.clone();
                    h.sems[self.sem(&s.name)?] += 1;
                    out.push((None, T::Nil, h));
                }
                Action::Wait(s) => {
                    let i = self.sem(&s.name)?;
                    if g.sems[i] > 0 {
                        let mut h = g.clone();
                        h.sems[i] -= 1;
                        out.push((None, T::Nil, h));
                    }
                }
                Action::Activate(port, pol) => {
                    for h in self.transmit(&port.name, g) {
                        out.push((Some(format!("{}{}", port.name, pol.symbol())), T::Nil, h));
                    }
                }
                Action::Do(c) => {
                    for h in self.transmit(&c.name, g) {
                        out.push((Some(c.name.clone()), T::Nil, h));
                    }
                }
                _ => unreachable!("normalised away"),
            },
            T::Seq(p, i, c) => {
                for (l, c2, h) in self.steps(c, g)? {
                    out.push((l, self.norm(T::Seq(*p, *i, Box::new(c2))), h));
                }
            }
            T::Par(cs) => {
                for (k, c) in cs.iter().enumerate() {
                    for (l, c2, h) in self.steps(c, g)? {
                        let mut v = cs.clone();
                        v[k] = c2;
                        out.push((l, self.norm(T::Par(v)), h));
                    }
                }
            }
            T::Loop(p, k, c) if **c == T::Nil => match p.0 {
                Action::RepeatForever(b) => {
                    out.push((None, T::Loop(*p, 0, Box::new(self.norm(T::Start(P(b))))), g.clone()))
                }
                Action::RepeatCounter(b, n, _) => {
                    let next = if k < n { T::Loop(*p, k + 1, Box::new(self.norm(T::Start(P(b))))) } else { T::Nil };
                    out.push((None, next, g.clone()));
                }
                Action::RepeatUntil(b, pred) => {
                    for v in self.decide(p.0, pred, g)? {
                        let again = T::Loop(*p, 0, Box::new(self.norm(T::Start(P(b)))));
                        out.push((None, self.branch(v, T::Nil, again), g.clone()));
                    }
                }
                _ => unreachable!(),
            },
            T::Loop(p, k, c) => {
                for (l, c2, h) in self.steps(c, g)? {
                    out.push((l, T::Loop(*p, *k, Box::new(c2)), h));
                }
            }
        }
        Ok(out)
    }
}

/// Activation traces of `u` up to `max_len` symbols. Symbols are `p!`/`p?`
/// for ports and groups and the bare name for collective ports.
pub fn enumerate_traces(u: &Unit, valuation: &Valuation, max_len: usize) -> Result<Traces, OracleError> {
    enumerate_traces_with(u, valuation, max_len, OracleOptions::default())
}

pub fn enumerate_traces_with(
    u: &Unit,
    valuation: &Valuation,
    max_len: usize,
    opts: OracleOptions,
) -> Result<Traces, OracleError> {
    let action = &u.protocol.action;
    let mut depth = FxHashMap::default();
    action.walk_with_depth(&mut |a, d| {
        depth.insert(a as *const Action, d);
    });
    let entities: Vec<Entity> = u
        .ports
        .iter()
        .map(|p| Entity { name: p.id.name.clone(), nesting: p.nesting, output: p.direction == Direction::Output })
        .collect();
    let ctx = Ctx {
        valuation,
        sems: u.protocol.semaphores.iter().enumerate().map(|(i, s)| (s.name.as_str(), i)).collect(),
        entity_of: u.ports.iter().enumerate().map(|(i, p)| (p.id.name.as_str(), i)).collect(),
        entities,
        depth,
    };
    let g0 = G {
        sems: vec![0; u.protocol.semaphores.len()],
        last: vec![None; ctx.entities.len()],
        pos: vec![0; ctx.entities.len()],
        exhausted: vec![false; ctx.entities.len()],
    };
    let t0 = ctx.norm(T::Start(P(action)));

    let mut seen: FxHashSet<(T, G, Trace)> = FxHashSet::default();
    let mut queue = VecDeque::new();
    seen.insert((t0.clone(), g0.clone(), Vec::new()));
    queue.push_back((t0, g0, Vec::new()));
    let mut res = Traces::default();
    while let Some((t, g, tr)) = queue.pop_front() {
        if t == T::Nil && g.sems.iter().all(|&s| s == 0) {
            res.complete.insert(tr.clone());
        }
        for (l, t2, g2) in ctx.steps(&t, &g)? {
            let tr2 = match l {
                None => tr.clone(),
                Some(_) if tr.len() >= max_len => continue,
                Some(s) => {
                    let mut v = tr.clone();
                    v.push(s);
                    v
                }
            };
            let key = (t2, g2, tr2);
            if !seen.contains(&key) {
                if seen.len() >= opts.max_states {
                    return Err(OracleError::StateLimit(opts.max_states));
                }
                seen.insert(key.clone());
                queue.push_back(key);
            }
        }
        res.prefixes.insert(tr);
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ahcl::{Ident, Port, Unit};

    fn unit(action: Action, sems: &[&str]) -> Unit {
        let mut u =
            Unit::new("u", vec![Port::single("a", Direction::Output), Port::single("b", Direction::Output)], action);
        u.protocol.semaphores = sems.iter().map(|s| Ident::new(*s)).collect();
        u
    }

    fn words(ts: &BTreeSet<Trace>) -> Vec<String> {
        ts.iter().map(|t| t.join(" ")).collect()
    }

    #[test]
    fn seq_and_par() {
        let t =
            enumerate_traces(&unit(Action::Seq(vec![Action::send("a"), Action::recv("b")]), &[]), &Valuation::Free, 8)
                .unwrap();
        assert_eq!(words(&t.complete), ["a! b?"]);
        assert_eq!(t.prefixes.len(), 3);
        let t =
            enumerate_traces(&unit(Action::Par(vec![Action::send("a"), Action::send("b")]), &[]), &Valuation::Free, 8)
                .unwrap();
        assert_eq!(words(&t.complete), ["a! b!", "b! a!"]);
    }

    #[test]
    fn semaphore_orders_branches() {
        let a = Action::Par(vec![
            Action::Seq(vec![Action::Wait("s".into()), Action::send("a")]),
            Action::Seq(vec![Action::send("b"), Action::Signal("s".into())]),
        ]);
        let t = enumerate_traces(&unit(a, &["s"]), &Valuation::Free, 8).unwrap();
        assert_eq!(words(&t.complete), ["b! a!"]);
    }

    #[test]
    fn unbalanced_signal_is_incomplete() {
        let t = enumerate_traces(&unit(Action::Signal("s".into()), &["s"]), &Valuation::Free, 4).unwrap();
        assert!(t.complete.is_empty());
    }

    #[test]
    fn counter_and_forever() {
        let t = enumerate_traces(&unit(Action::counter(Action::send("a"), 3), &[]), &Valuation::Free, 5).unwrap();
        assert_eq!(words(&t.complete), ["a! a! a!"]);
        let t = enumerate_traces(&unit(Action::forever(Action::send("a")), &[]), &Valuation::Free, 3).unwrap();
        assert!(t.complete.is_empty());
        assert_eq!(t.prefixes.len(), 4);
        let t = enumerate_traces(&unit(Action::forever(Action::Skip), &[]), &Valuation::Free, 3).unwrap();
        assert_eq!(t.prefixes.len(), 1);
    }

    #[test]
    fn scripted_until() {
        let mut u = unit(Action::until(Action::send("a"), StreamPredicate::var("a")), &[]);
        u.ports[0] = Port::single("a", Direction::Output).streamed(1);
        let script: BTreeMap<_, _> =
            [("a".to_string(), vec![StreamKind::Data, StreamKind::Data, StreamKind::Eos(0)])].into();
        let t = enumerate_traces(&u, &Valuation::Scripted(script.clone()), 8).unwrap();
        assert_eq!(words(&t.complete), ["a! a! a!"]);
        let short: BTreeMap<_, _> = [("a".to_string(), vec![StreamKind::Data])].into();
        assert_eq!(enumerate_traces(&u, &Valuation::Scripted(short), 8), Err(OracleError::ScriptExhausted("a".into())));
    }

    #[test]
    fn order_consistency_stops_after_final_terminator() {
        // the loop only exits on EOS0, after which `a` is finalized
        let body = Action::Seq(vec![Action::until(Action::send("a"), StreamPredicate::var("a")), Action::send("a")]);
        let mut u = unit(body, &[]);
        u.ports[0] = Port::single("a", Direction::Output).streamed(1);
        let loose = enumerate_traces(&u, &Valuation::FreeKinds { order_consistency: false }, 4).unwrap();
        assert_eq!(words(&loose.complete), ["a! a!", "a! a! a!", "a! a! a! a!"]);
        let strict = enumerate_traces(&u, &Valuation::FreeKinds { order_consistency: true }, 4).unwrap();
        assert!(strict.complete.is_empty());
        assert_eq!(strict.prefixes.len(), 5);
    }
}
