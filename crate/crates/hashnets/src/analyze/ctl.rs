//! CTL over explored reachability graphs.
//!
//! Labelling is three-valued. Each subformula gets a pair of node sets: the
//! nodes where it certainly holds (`must`) and those where it may hold
//! (`may`). On a complete graph the two coincide. Nodes whose successor list
//! is incomplete (frontier of a truncated run) make the next-step operators
//! uncertain, and the uncertainty is carried through the fixpoints.
//!
//! Paths are maximal: a dead marking has no successor, so `EX φ` is false
//! and `AX φ` true there, and `EG φ` holds at a dead marking satisfying φ.

use super::AnalysisError;
use crate::petri::{Cmp, CompiledNet, Marking, ReachGraph};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{HashMap, VecDeque};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn eval(self, a: u32, b: u32) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StateAtom {
    /// `M(place) cmp k`
    Tokens {
        place: String,
        cmp: CmpOp,
        k: u32,
    },
    Enabled(String),
    /// No transition enabled.
    Deadlock,
    /// The net's final predicate holds.
    Final,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CtlFormula {
    Const(bool),
    Atom(StateAtom),
    Not(Box<CtlFormula>),
    And(Vec<CtlFormula>),
    Or(Vec<CtlFormula>),
    Implies(Box<CtlFormula>, Box<CtlFormula>),
    Ex(Box<CtlFormula>),
    Ax(Box<CtlFormula>),
    Ef(Box<CtlFormula>),
    Af(Box<CtlFormula>),
    Eg(Box<CtlFormula>),
    Ag(Box<CtlFormula>),
    Eu(Box<CtlFormula>, Box<CtlFormula>),
    Au(Box<CtlFormula>, Box<CtlFormula>),
}

impl CtlFormula {
    pub fn tokens(place: impl Into<String>, cmp: CmpOp, k: u32) -> Self {
        CtlFormula::Atom(StateAtom::Tokens { place: place.into(), cmp, k })
    }

    pub fn marked(place: impl Into<String>) -> Self {
        Self::tokens(place, CmpOp::Ge, 1)
    }

    pub fn empty(place: impl Into<String>) -> Self {
        Self::tokens(place, CmpOp::Eq, 0)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: CtlFormula) -> Self {
        match f {
            CtlFormula::Const(b) => CtlFormula::Const(!b),
            CtlFormula::Not(g) => *g,
            g => CtlFormula::Not(Box::new(g)),
        }
    }

    /// Conjunction with constant folding; the empty conjunction is true.
    pub fn and(fs: Vec<CtlFormula>) -> Self {
        let mut out = Vec::new();
        for f in fs {
            match f {
                CtlFormula::Const(true) => {}
                CtlFormula::Const(false) => return CtlFormula::Const(false),
                CtlFormula::And(gs) => out.extend(gs),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => CtlFormula::Const(true),
            1 => out.pop().unwrap(),
            _ => CtlFormula::And(out),
        }
    }

    pub fn or(fs: Vec<CtlFormula>) -> Self {
        let mut out = Vec::new();
        for f in fs {
            match f {
                CtlFormula::Const(false) => {}
                CtlFormula::Const(true) => return CtlFormula::Const(true),
                CtlFormula::Or(gs) => out.extend(gs),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => CtlFormula::Const(false),
            1 => out.pop().unwrap(),
            _ => CtlFormula::Or(out),
        }
    }

    pub fn size(&self) -> usize {
        use CtlFormula::*;
        match self {
            Const(_) | Atom(_) => 1,
            Not(f) | Ex(f) | Ax(f) | Ef(f) | Af(f) | Eg(f) | Ag(f) => 1 + f.size(),
            And(fs) | Or(fs) => 1 + fs.iter().map(Self::size).sum::<usize>(),
            Implies(a, b) | Eu(a, b) | Au(a, b) => 1 + a.size() + b.size(),
        }
    }
}

impl fmt::Display for StateAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateAtom::Tokens { place, cmp, k } => write!(f, "{place} {} {k}", cmp.symbol()),
            StateAtom::Enabled(t) => write!(f, "enabled[{t}]"),
            StateAtom::Deadlock => f.write_str("deadlock"),
            StateAtom::Final => f.write_str("final"),
        }
    }
}

impl fmt::Display for CtlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use CtlFormula::*;
        let join = |f: &mut fmt::Formatter<'_>, fs: &[CtlFormula], op: &str| -> fmt::Result {
            f.write_str("(")?;
            for (i, g) in fs.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{g}")?;
            }
            f.write_str(")")
        };
        match self {
            Const(b) => write!(f, "{b}"),
            Atom(a) => write!(f, "{a}"),
            Not(g) => write!(f, "!{g}"),
            And(fs) => join(f, fs, "&"),
            Or(fs) => join(f, fs, "|"),
            Implies(a, b) => write!(f, "({a} -> {b})"),
            Ex(g) => write!(f, "EX {g}"),
            Ax(g) => write!(f, "AX {g}"),
            Ef(g) => write!(f, "EF {g}"),
            Af(g) => write!(f, "AF {g}"),
            Eg(g) => write!(f, "EG {g}"),
            Ag(g) => write!(f, "AG {g}"),
            Eu(a, b) => write!(f, "E[{a} U {b}]"),
            Au(a, b) => write!(f, "A[{a} U {b}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    True,
    False,
    /// The explored part of a truncated graph does not decide the formula.
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::True => "true",
            Verdict::False => "false",
            Verdict::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CheckOptions {
    /// Refuse truncated or reduced graphs instead of answering three-valued.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CtlResult {
    pub verdict: Verdict,
    /// Witness for a true existential formula or counterexample for a false
    /// universal one: transition ids firing from the initial marking.
    pub path: Option<Vec<String>>,
    /// Position in `path` where a lasso closes (EG witnesses).
    pub loop_start: Option<usize>,
    pub states: usize,
    /// The graph was truncated or reduced.
    pub partial: bool,
}

/// Must/may node sets of one subformula.
#[derive(Debug, Clone)]
struct Sat {
    must: Vec<bool>,
    may: Vec<bool>,
}

impl Sat {
    fn exact(v: Vec<bool>) -> Sat {
        Sat { may: v.clone(), must: v }
    }

    fn negate(self) -> Sat {
        Sat { must: self.may.into_iter().map(|b| !b).collect(), may: self.must.into_iter().map(|b| !b).collect() }
    }
}

struct Checker<'a> {
    g: &'a ReachGraph,
    /// Truth of every atom of the formula, one bit per node.
    atoms: HashMap<StateAtom, Vec<u64>>,
    pred: Vec<Vec<(u32, u32)>>,
    /// No transition enabled.
    dead: Vec<bool>,
    /// Successor list may be missing edges.
    open: Vec<bool>,
}

fn bools(n: usize, f: impl Fn(usize) -> bool) -> Vec<bool> {
    (0..n).map(f).collect()
}

impl<'a> Checker<'a> {
    fn new(net: &'a CompiledNet, g: &'a ReachGraph, f: &CtlFormula) -> Result<Self, AnalysisError> {
        let n = g.len();
        let mut list = Vec::new();
        collect_atoms(f, &mut list);
        list.sort_by_key(|a| a.to_string());
        list.dedup();
        let eval = compile_atoms(net, &list)?;
        // 64 nodes per work item: dead bits, then one word per atom
        let words = n.div_ceil(64);
        let chunks: Vec<(u64, Vec<u64>)> = (0..words)
            .into_par_iter()
            .map(|w| {
                let mut dead_bits = 0u64;
                let mut bits = vec![0u64; eval.len()];
                for i in w * 64..((w + 1) * 64).min(n) {
                    let m = g.marking(i);
                    let dead = if g.is_expanded(i) {
                        g.successors(i).is_empty()
                    } else {
                        net.enabled_transitions(&m).next().is_none()
                    };
                    dead_bits |= u64::from(dead) << (i % 64);
                    for (k, e) in eval.iter().enumerate() {
                        bits[k] |= u64::from(e(&m, dead)) << (i % 64);
                    }
                }
                (dead_bits, bits)
            })
            .collect();
        let dead = bools(n, |i| chunks[i / 64].0 >> (i % 64) & 1 == 1);
        let atoms: HashMap<StateAtom, Vec<u64>> =
            list.into_iter().enumerate().map(|(k, a)| (a, chunks.iter().map(|c| c.1[k]).collect())).collect();
        let open = bools(n, |i| !g.is_expanded(i) && !dead[i]);
        Ok(Checker { g, atoms, pred: g.predecessors(), dead, open })
    }

    fn len(&self) -> usize {
        self.g.len()
    }

    fn atom(&self, a: &StateAtom) -> Vec<bool> {
        let bits = &self.atoms[a];
        bools(self.len(), |i| bits[i / 64] >> (i % 64) & 1 == 1)
    }

    fn label(&self, f: &CtlFormula) -> Result<Sat, AnalysisError> {
        use CtlFormula::*;
        let n = self.len();
        Ok(match f {
            Const(b) => Sat::exact(vec![*b; n]),
            Atom(a) => Sat::exact(self.atom(a)),
            Not(g) => self.label(g)?.negate(),
            And(fs) => {
                let mut acc = Sat::exact(vec![true; n]);
                for g in fs {
                    let s = self.label(g)?;
                    for i in 0..n {
                        acc.must[i] &= s.must[i];
                        acc.may[i] &= s.may[i];
                    }
                }
                acc
            }
            Or(fs) => {
                let mut acc = Sat::exact(vec![false; n]);
                for g in fs {
                    let s = self.label(g)?;
                    for i in 0..n {
                        acc.must[i] |= s.must[i];
                        acc.may[i] |= s.may[i];
                    }
                }
                acc
            }
            Implies(a, b) => self.label(&Or(vec![Not(a.clone()), (**b).clone()]))?,
            Ex(g) => {
                let s = self.label(g)?;
                self.ex(&s)
            }
            Ax(g) => self.ex(&self.label(g)?.negate()).negate(),
            Ef(g) => {
                let s = self.label(g)?;
                self.eu(&Sat::exact(vec![true; n]), &s)
            }
            Ag(g) => self.eu(&Sat::exact(vec![true; n]), &self.label(g)?.negate()).negate(),
            Eu(a, b) => {
                let (a, b) = (self.label(a)?, self.label(b)?);
                self.eu(&a, &b)
            }
            Eg(g) => {
                let s = self.label(g)?;
                self.eg(&s)
            }
            Af(g) => self.eg(&self.label(g)?.negate()).negate(),
            Au(a, b) => {
                // A[a U b] = !(E[!b U (!a & !b)] | EG !b)
                let (a, b) = (self.label(a)?, self.label(b)?);
                let nb = b.negate();
                let na = a.negate();
                let both =
                    Sat { must: bools(n, |i| na.must[i] && nb.must[i]), may: bools(n, |i| na.may[i] && nb.may[i]) };
                let x = self.eu(&nb, &both);
                let y = self.eg(&nb);
                Sat { must: bools(n, |i| x.must[i] || y.must[i]), may: bools(n, |i| x.may[i] || y.may[i]) }.negate()
            }
        })
    }

    fn ex(&self, s: &Sat) -> Sat {
        let g = self.g;
        Sat {
            must: bools(self.len(), |i| g.successors(i).iter().any(|&(_, d)| s.must[d as usize])),
            may: bools(self.len(), |i| self.open[i] || g.successors(i).iter().any(|&(_, d)| s.may[d as usize])),
        }
    }

    /// Least fixpoint of `b | (a & EX z)`, by backward search.
    fn eu(&self, a: &Sat, b: &Sat) -> Sat {
        let must = self.backward(&b.must, &a.must);
        let seed = bools(self.len(), |i| b.may[i] || (self.open[i] && a.may[i]));
        let may = self.backward(&seed, &a.may);
        Sat { must, may }
    }

    fn backward(&self, seed: &[bool], through: &[bool]) -> Vec<bool> {
        let mut out = seed.to_vec();
        let mut queue: VecDeque<usize> = (0..self.len()).filter(|&i| seed[i]).collect();
        while let Some(d) = queue.pop_front() {
            for &(s, _) in &self.pred[d] {
                let s = s as usize;
                if !out[s] && through[s] {
                    out[s] = true;
                    queue.push_back(s);
                }
            }
        }
        out
    }

    /// Greatest fixpoint of `a & (dead | EX z)`.
    fn eg(&self, a: &Sat) -> Sat {
        Sat { must: self.gfp(&a.must, false), may: self.gfp(&a.may, true) }
    }

    fn gfp(&self, a: &[bool], optimistic: bool) -> Vec<bool> {
        let n = self.len();
        let mut z = a.to_vec();
        let keep = |i: usize| self.dead[i] || (optimistic && self.open[i]);
        let mut count: Vec<usize> = (0..n).map(|i| self.successors_in(i, &z)).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| z[i] && count[i] == 0 && !keep(i)).collect();
        for &i in &queue {
            z[i] = false;
        }
        while let Some(d) = queue.pop_front() {
            for &(s, _) in &self.pred[d] {
                let s = s as usize;
                count[s] -= 1;
                if z[s] && count[s] == 0 && !keep(s) {
                    z[s] = false;
                    queue.push_back(s);
                }
            }
        }
        z
    }

    /// Number of out-edges of `i` into `z` (parallel edges counted).
    fn successors_in(&self, i: usize, z: &[bool]) -> usize {
        self.g.successors(i).iter().filter(|&&(_, d)| z[d as usize]).count()
    }
}

fn collect_atoms(f: &CtlFormula, out: &mut Vec<StateAtom>) {
    use CtlFormula::*;
    match f {
        Const(_) => {}
        Atom(a) => out.push(a.clone()),
        Not(g) | Ex(g) | Ax(g) | Ef(g) | Af(g) | Eg(g) | Ag(g) => collect_atoms(g, out),
        And(fs) | Or(fs) => fs.iter().for_each(|g| collect_atoms(g, out)),
        Implies(a, b) | Eu(a, b) | Au(a, b) => {
            collect_atoms(a, out);
            collect_atoms(b, out);
        }
    }
}

type AtomEval = Box<dyn Fn(&Marking, bool) -> bool + Send + Sync>;

/// Resolves atom names against the net once, up front.
fn compile_atoms(net: &CompiledNet, atoms: &[StateAtom]) -> Result<Vec<AtomEval>, AnalysisError> {
    atoms
        .iter()
        .map(|a| -> Result<AtomEval, AnalysisError> {
            Ok(match a {
                StateAtom::Tokens { place, cmp, k } => {
                    let p = net.place_index(place).ok_or_else(|| AnalysisError::UnknownPlace(place.clone()))?;
                    let (cmp, k) = (*cmp, *k);
                    Box::new(move |m, _| cmp.eval(m.get(p), k))
                }
                StateAtom::Enabled(t) => {
                    let t = net.transition_index(t).ok_or_else(|| AnalysisError::UnknownTransition(t.clone()))?;
                    let pre = net.pre[t].clone();
                    Box::new(move |m, _| pre.iter().all(|&(p, w)| m.get(p) >= w))
                }
                StateAtom::Deadlock => Box::new(|_, dead| dead),
                StateAtom::Final => {
                    let f = net.final_predicate.clone().ok_or(AnalysisError::NoFinalPredicate)?;
                    Box::new(move |m, _| {
                        f.iter().all(|&(p, cmp, k)| match cmp {
                            Cmp::Eq => m.get(p) == k,
                            Cmp::Ge => m.get(p) >= k,
                        })
                    })
                }
            })
        })
        .collect()
}

/// Labels `f` over `g` and reports the verdict at the initial marking.
pub fn check_ctl(
    net: &CompiledNet,
    g: &ReachGraph,
    f: &CtlFormula,
    opt: CheckOptions,
) -> Result<CtlResult, AnalysisError> {
    if opt.strict && !g.is_complete() {
        return Err(AnalysisError::TruncatedGraph);
    }
    let c = Checker::new(net, g, f)?;
    let s = c.label(f)?;
    let verdict = if s.must[0] {
        Verdict::True
    } else if !s.may[0] {
        Verdict::False
    } else {
        Verdict::Unknown
    };
    let (path, loop_start) = match witness(&c, f, verdict)? {
        Some((nodes, transitions, lp)) => {
            debug_assert_eq!(nodes.len(), transitions.len() + 1);
            (Some(transitions.into_iter().map(|t| net.transitions[t].clone()).collect()), lp)
        }
        None => (None, None),
    };
    Ok(CtlResult { verdict, path, loop_start, states: g.len(), partial: !g.is_complete() })
}

type Walk = (Vec<usize>, Vec<usize>, Option<usize>);

/// Root-anchored path for the outermost temporal operator, when the verdict
/// has one. Only decided verdicts get a path.
fn witness(c: &Checker, f: &CtlFormula, verdict: Verdict) -> Result<Option<Walk>, AnalysisError> {
    use CtlFormula::*;
    let want = match verdict {
        Verdict::True => true,
        Verdict::False => false,
        Verdict::Unknown => return Ok(None),
    };
    // strip negations, tracking which polarity we must demonstrate
    let mut f = f;
    let mut want = want;
    while let Not(g) = f {
        f = g;
        want = !want;
    }
    let n = c.len();
    let all = Sat::exact(vec![true; n]);
    Ok(match (f, want) {
        (Ex(g), true) => step(c, &c.label(g)?.must),
        (Ax(g), false) => step(c, &c.label(g)?.negate().must),
        (Ef(g), true) => reach(c, &all.must, &c.label(g)?.must),
        (Ag(g), false) => reach(c, &all.must, &c.label(g)?.negate().must),
        (Eu(a, b), true) => reach(c, &c.label(a)?.must, &c.label(b)?.must),
        (Eg(g), true) => lasso(c, &c.eg(&c.label(g)?).must),
        (Af(g), false) => lasso(c, &c.eg(&c.label(g)?.negate()).must),
        (Au(a, b), false) => {
            let (a, b) = (c.label(a)?, c.label(b)?);
            let nb = b.negate();
            let bad: Vec<bool> = bools(n, |i| !a.may[i] && nb.must[i]);
            reach(c, &nb.must, &bad).or_else(|| lasso(c, &c.eg(&nb).must))
        }
        _ => None,
    })
}

fn step(c: &Checker, target: &[bool]) -> Option<Walk> {
    let &(t, d) = c.g.successors(0).iter().find(|&&(_, d)| target[d as usize])?;
    Some((vec![0, d as usize], vec![t as usize], None))
}

/// Shortest path from the root through `through` nodes to a `target` node.
fn reach(c: &Checker, through: &[bool], target: &[bool]) -> Option<Walk> {
    let n = c.len();
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        if target[i] {
            let (mut nodes, mut ts) = (vec![i], Vec::new());
            let mut k = i;
            while let Some((p, t)) = parent[k] {
                nodes.push(p);
                ts.push(t);
                k = p;
            }
            nodes.reverse();
            ts.reverse();
            return Some((nodes, ts, None));
        }
        if !through[i] {
            continue;
        }
        for &(t, d) in c.g.successors(i) {
            let d = d as usize;
            if !seen[d] {
                seen[d] = true;
                parent[d] = Some((i, t as usize));
                queue.push_back(d);
            }
        }
    }
    None
}

/// A walk that stays inside `z` (an EG fixpoint) from the root until it
/// revisits a node or reaches a dead marking.
fn lasso(c: &Checker, z: &[bool]) -> Option<Walk> {
    if !z[0] {
        return None;
    }
    let mut pos = vec![usize::MAX; c.len()];
    let (mut nodes, mut ts) = (vec![0usize], Vec::new());
    pos[0] = 0;
    let mut i = 0;
    loop {
        if c.dead[i] {
            return Some((nodes, ts, None));
        }
        let &(t, d) = c.g.successors(i).iter().find(|&&(_, d)| z[d as usize])?;
        let d = d as usize;
        ts.push(t as usize);
        nodes.push(d);
        if pos[d] != usize::MAX {
            return Some((nodes, ts, Some(pos[d])));
        }
        pos[d] = nodes.len() - 1;
        i = d;
    }
}
