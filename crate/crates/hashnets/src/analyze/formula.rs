//! Formula files and the macro layer.
//!
//! A file holds one statement per line (a line continues while brackets are
//! open or it ends in an operator):
//!
//! ```text
//! # comment
//! let N = 5
//! phil_finished[p] :: process_finished[phil[p]]
//! all_finished :: forall p < N : phil_finished[p]
//! deadlock: EF (forall p < N : phil_waiting[p] | phil_finished[p]) & !all_finished
//! AG !deadlock
//! ```
//!
//! A call `name[args]` is a user macro, a built-in macro, or else a place
//! id (`name[a,b]` with the arguments evaluated), optionally followed by a
//! comparison `>= k`, `= k` and so on. A bare place means `>= 1`.
//! Arguments are integers with `+ - * mod` or names; dotted paths such as
//! `phil[p].lf_get` are names with their indices evaluated.

use super::ctl::{CmpOp, CtlFormula, StateAtom};
use super::AnalysisError;
use crate::ahcl::{ChannelMode, Component, Direction, GroupKind, Port, Unit};
use crate::petri::InterlacedNet;
use crate::translate::names;
use crate::translate::{activations, Activation};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
}

const SYMBOLS: [&str; 23] = [
    "::", "->", "=>", ">=", "<=", "!=", "==", "(", ")", "[", "]", ",", ".", ":", "&", "|", "!", "=", "<", ">", "+",
    "-", "*",
];

fn lex(line: usize, text: &str) -> Result<Vec<Tok>, AnalysisError> {
    let mut out = Vec::new();
    let b = text.as_bytes();
    let mut i = 0;
    'outer: while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let s = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            let v = text[s..i].parse().map_err(|_| parse_err(line, "integer out of range"))?;
            out.push(Tok::Int(v));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'\'') {
                i += 1;
            }
            out.push(Tok::Ident(text[s..i].to_string()));
            continue;
        }
        for sym in SYMBOLS {
            if text[i..].starts_with(sym) {
                out.push(Tok::Sym(if sym == "==" { "=" } else { sym }));
                i += sym.len();
                continue 'outer;
            }
        }
        return Err(parse_err(line, &format!("unexpected character `{c}`")));
    }
    Ok(out)
}

fn parse_err(line: usize, msg: &str) -> AnalysisError {
    AnalysisError::Parse { line, message: msg.to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ArOp {
    Add,
    Sub,
    Mul,
    Mod,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Seg {
    name: String,
    index: Vec<Term>,
}

/// Argument expression.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Term {
    Int(i64),
    /// Dotted path of indexed names; a lone bare name may be a variable.
    Path(Vec<Seg>),
    Op(ArOp, Box<Term>, Box<Term>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Temporal {
    Ex,
    Ax,
    Ef,
    Af,
    Eg,
    Ag,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Fx {
    Bool(bool),
    Not(Box<Fx>),
    And(Box<Fx>, Box<Fx>),
    Or(Box<Fx>, Box<Fx>),
    Implies(Box<Fx>, Box<Fx>),
    Temporal(Temporal, Box<Fx>),
    Until {
        all: bool,
        hold: Box<Fx>,
        goal: Box<Fx>,
    },
    /// Quantifier over the integers `lo..=hi`.
    Quant {
        all: bool,
        var: String,
        lo: Term,
        hi: Term,
        body: Box<Fx>,
    },
    Call {
        name: String,
        args: Vec<Term>,
        cmp: Option<(CmpOp, Term)>,
    },
}

struct Parser<'t> {
    toks: &'t [Tok],
    pos: usize,
    line: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k)
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == s)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), AnalysisError> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{s}`")))
        }
    }

    fn err(&self, msg: &str) -> AnalysisError {
        let at = match self.peek() {
            Some(Tok::Ident(s)) => format!(" near `{s}`"),
            Some(Tok::Int(v)) => format!(" near `{v}`"),
            Some(Tok::Sym(s)) => format!(" near `{s}`"),
            None => " at end of line".into(),
        };
        parse_err(self.line, &format!("{msg}{at}"))
    }

    fn ident(&mut self) -> Result<String, AnalysisError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err("expected a name")),
        }
    }

    fn done(&self) -> Result<(), AnalysisError> {
        if self.pos == self.toks.len() {
            Ok(())
        } else {
            Err(self.err("unexpected token"))
        }
    }

    fn formula(&mut self) -> Result<Fx, AnalysisError> {
        let lhs = self.or()?;
        if self.eat("->") || self.eat("=>") {
            let rhs = self.formula()?;
            return Ok(Fx::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Fx, AnalysisError> {
        let mut f = self.and()?;
        while self.eat("|") {
            f = Fx::Or(Box::new(f), Box::new(self.and()?));
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Fx, AnalysisError> {
        let mut f = self.unary()?;
        while self.eat("&") {
            f = Fx::And(Box::new(f), Box::new(self.unary()?));
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Fx, AnalysisError> {
        if self.eat("!") {
            return Ok(Fx::Not(Box::new(self.unary()?)));
        }
        if let Some(Tok::Ident(s)) = self.peek() {
            let op = match s.as_str() {
                "EX" => Some(Temporal::Ex),
                "AX" => Some(Temporal::Ax),
                "EF" => Some(Temporal::Ef),
                "AF" => Some(Temporal::Af),
                "EG" => Some(Temporal::Eg),
                "AG" => Some(Temporal::Ag),
                _ => None,
            };
            if let Some(op) = op {
                self.pos += 1;
                return Ok(Fx::Temporal(op, Box::new(self.unary()?)));
            }
            if (s == "E" || s == "A") && matches!(self.peek_at(1), Some(Tok::Sym("[" | "("))) {
                let all = s == "A";
                self.pos += 1;
                let close = if self.eat("[") {
                    "]"
                } else {
                    self.expect("(")?;
                    ")"
                };
                let hold = self.formula()?;
                if !self.is_ident("U") {
                    return Err(self.err("expected `U`"));
                }
                self.pos += 1;
                let goal = self.formula()?;
                self.expect(close)?;
                return Ok(Fx::Until { all, hold: Box::new(hold), goal: Box::new(goal) });
            }
            if s == "forall" || s == "exists" {
                let all = s == "forall";
                self.pos += 1;
                let var = self.ident()?;
                let (lo, hi) = if self.eat("<") {
                    let hi = self.term()?;
                    (Term::Int(0), Term::Op(ArOp::Sub, Box::new(hi), Box::new(Term::Int(1))))
                } else if self.is_ident("in") {
                    self.pos += 1;
                    self.expect("[")?;
                    let lo = self.term()?;
                    self.expect(",")?;
                    let hi = self.term()?;
                    self.expect("]")?;
                    (lo, hi)
                } else {
                    return Err(self.err("expected `<` or `in` after the quantified variable"));
                };
                self.expect(":")?;
                let body = self.formula()?;
                return Ok(Fx::Quant { all, var, lo, hi, body: Box::new(body) });
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Fx, AnalysisError> {
        if self.eat("(") {
            let f = self.formula()?;
            self.expect(")")?;
            return Ok(f);
        }
        let name = self.ident()?;
        match name.as_str() {
            "true" => return Ok(Fx::Bool(true)),
            "false" => return Ok(Fx::Bool(false)),
            _ => {}
        }
        let mut args = Vec::new();
        if self.eat("[") {
            if !self.is_sym("]") {
                args.push(self.term()?);
                while self.eat(",") {
                    args.push(self.term()?);
                }
            }
            self.expect("]")?;
        }
        let cmp = [
            (">=", CmpOp::Ge),
            ("<=", CmpOp::Le),
            ("!=", CmpOp::Ne),
            ("=", CmpOp::Eq),
            ("<", CmpOp::Lt),
            (">", CmpOp::Gt),
        ]
        .into_iter()
        .find(|(s, _)| self.is_sym(s));
        let cmp = match cmp {
            Some((_, op)) => {
                self.pos += 1;
                Some((op, self.sum()?))
            }
            None => None,
        };
        Ok(Fx::Call { name, args, cmp })
    }

    /// `a mod b` binds loosest, so `f + 1 mod N` is `(f + 1) mod N`.
    fn term(&mut self) -> Result<Term, AnalysisError> {
        let mut t = self.sum()?;
        while self.is_ident("mod") {
            self.pos += 1;
            t = Term::Op(ArOp::Mod, Box::new(t), Box::new(self.sum()?));
        }
        Ok(t)
    }

    fn sum(&mut self) -> Result<Term, AnalysisError> {
        let mut t = self.product()?;
        loop {
            let op = if self.eat("+") {
                ArOp::Add
            } else if self.eat("-") {
                ArOp::Sub
            } else {
                return Ok(t);
            };
            t = Term::Op(op, Box::new(t), Box::new(self.product()?));
        }
    }

    fn product(&mut self) -> Result<Term, AnalysisError> {
        let mut t = self.atom_term()?;
        while self.eat("*") {
            t = Term::Op(ArOp::Mul, Box::new(t), Box::new(self.atom_term()?));
        }
        Ok(t)
    }

    fn atom_term(&mut self) -> Result<Term, AnalysisError> {
        if self.eat("(") {
            let t = self.term()?;
            self.expect(")")?;
            return Ok(t);
        }
        if self.eat("-") {
            return Ok(Term::Op(ArOp::Sub, Box::new(Term::Int(0)), Box::new(self.atom_term()?)));
        }
        if let Some(Tok::Int(v)) = self.peek() {
            let v = *v;
            self.pos += 1;
            return Ok(Term::Int(v));
        }
        let mut segs = Vec::new();
        loop {
            let name = self.ident()?;
            let mut index = Vec::new();
            while self.eat("[") {
                index.push(self.term()?);
                while self.eat(",") {
                    index.push(self.term()?);
                }
                self.expect("]")?;
            }
            segs.push(Seg { name, index });
            if !self.eat(".") {
                break;
            }
        }
        Ok(Term::Path(segs))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MacroDef {
    pub name: String,
    pub params: Vec<String>,
    body: Fx,
    pub text: String,
}

/// A named formula of a file, before expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedFormula {
    pub name: String,
    pub text: String,
    body: Fx,
}

/// Constants, macros and formulas of one or more formula files.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MacroLibrary {
    pub constants: BTreeMap<String, i64>,
    pub macros: BTreeMap<String, MacroDef>,
    pub formulas: Vec<NamedFormula>,
    /// Constants supplied from outside; `let` does not rebind them.
    fixed: BTreeSet<String>,
}

/// Splits text into logical statements with their first line number.
fn statements(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut first = 0;
    let mut depth = 0i32;
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let line = match line.find("//") {
            Some(k) => &line[..k],
            None => line,
        };
        let t = line.trim();
        if t.is_empty() && cur.is_empty() {
            continue;
        }
        let leading = ["&", "|", "->", "=>"].iter().any(|op| t.starts_with(op));
        if !cur.is_empty() && depth <= 0 && !leading && !continues(&cur) {
            out.push((first, std::mem::take(&mut cur)));
        }
        if cur.is_empty() {
            first = no + 1;
        }
        if !t.is_empty() {
            cur.push(' ');
            cur.push_str(t);
        }
        depth += t
            .chars()
            .map(|c| match c {
                '(' | '[' => 1,
                ')' | ']' => -1,
                _ => 0,
            })
            .sum::<i32>();
    }
    if !cur.trim().is_empty() {
        out.push((first, cur));
    }
    out.into_iter().map(|(l, s)| (l, s.trim().to_string())).collect()
}

fn continues(s: &str) -> bool {
    let s = s.trim_end();
    ["&", "|", "->", "=>", "::", ":", ",", "!"].iter().any(|op| s.ends_with(op))
}

impl MacroLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Library with `constants` predefined. They take precedence over the
    /// `let` defaults of files added later.
    pub fn with_constants(constants: &[(&str, i64)]) -> Self {
        let mut lib = Self::default();
        for (k, v) in constants {
            lib.constants.insert(k.to_string(), *v);
            lib.fixed.insert(k.to_string());
        }
        lib
    }

    pub fn parse(text: &str) -> Result<Self, AnalysisError> {
        let mut lib = Self::default();
        lib.add_file(text)?;
        Ok(lib)
    }

    pub fn add_file(&mut self, text: &str) -> Result<(), AnalysisError> {
        for (line, stmt) in statements(text) {
            self.add_statement(line, &stmt)?;
        }
        Ok(())
    }

    fn add_statement(&mut self, line: usize, stmt: &str) -> Result<(), AnalysisError> {
        let toks = lex(line, stmt)?;
        let mut p = Parser { toks: &toks, pos: 0, line };
        if p.is_ident("let") && matches!(p.peek_at(2), Some(Tok::Sym("="))) {
            p.pos += 1;
            let name = p.ident()?;
            p.expect("=")?;
            let t = p.term()?;
            p.done()?;
            let v = eval_int(&t, &BTreeMap::new(), &self.constants).map_err(|e| parse_err(line, &e.to_string()))?;
            if !self.fixed.contains(&name) {
                self.constants.insert(name, v);
            }
            return Ok(());
        }
        if let Some(k) = toks.iter().position(|t| *t == Tok::Sym("::")) {
            let mut h = Parser { toks: &toks[..k], pos: 0, line };
            let name = h.ident()?;
            let mut params = Vec::new();
            if h.eat("[") {
                if !h.is_sym("]") {
                    params.push(h.ident()?);
                    while h.eat(",") {
                        params.push(h.ident()?);
                    }
                }
                h.expect("]")?;
            }
            h.done()?;
            let mut b = Parser { toks: &toks[k + 1..], pos: 0, line };
            let body = b.formula()?;
            b.done()?;
            let text = stmt.split_once("::").map(|x| x.1.trim().to_string()).unwrap_or_default();
            self.macros.insert(name.clone(), MacroDef { name, params, body, text });
            return Ok(());
        }
        let named = matches!((p.peek(), p.peek_at(1)), (Some(Tok::Ident(s)), Some(Tok::Sym(":"))) if s != "forall" && s != "exists");
        let (name, text) = if named {
            let name = p.ident()?;
            p.pos += 1;
            (name, stmt.split_once(':').map(|x| x.1.trim().to_string()).unwrap_or_default())
        } else {
            (stmt.to_string(), stmt.to_string())
        };
        let body = p.formula()?;
        p.done()?;
        self.formulas.push(NamedFormula { name, text, body });
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Value {
    Int(i64),
    Name(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Name(s) => f.write_str(s),
        }
    }
}

type Env = BTreeMap<String, Value>;

fn eval(t: &Term, env: &Env, consts: &BTreeMap<String, i64>) -> Result<Value, AnalysisError> {
    match t {
        Term::Int(v) => Ok(Value::Int(*v)),
        Term::Path(segs) => {
            if let [Seg { name, index }] = segs.as_slice() {
                if index.is_empty() {
                    if let Some(v) = env.get(name) {
                        return Ok(v.clone());
                    }
                    if let Some(v) = consts.get(name) {
                        return Ok(Value::Int(*v));
                    }
                }
            }
            let mut out = String::new();
            for (i, s) in segs.iter().enumerate() {
                if i > 0 {
                    out.push('.');
                }
                out.push_str(&s.name);
                if !s.index.is_empty() {
                    let vals: Vec<String> = s
                        .index
                        .iter()
                        .map(|x| eval(x, env, consts).map(|v| v.to_string()))
                        .collect::<Result<_, _>>()?;
                    out.push('[');
                    out.push_str(&vals.join(","));
                    out.push(']');
                }
            }
            Ok(Value::Name(out))
        }
        Term::Op(op, a, b) => {
            let (a, b) = (eval_int(a, env, consts)?, eval_int(b, env, consts)?);
            Ok(Value::Int(match op {
                ArOp::Add => a + b,
                ArOp::Sub => a - b,
                ArOp::Mul => a * b,
                ArOp::Mod if b == 0 => return Err(AnalysisError::Expansion("modulo by zero".into())),
                ArOp::Mod => a.rem_euclid(b),
            }))
        }
    }
}

fn eval_int(t: &Term, env: &Env, consts: &BTreeMap<String, i64>) -> Result<i64, AnalysisError> {
    match eval(t, env, consts)? {
        Value::Int(v) => Ok(v),
        Value::Name(s) => Err(AnalysisError::Expansion(format!("`{s}` is not an integer"))),
    }
}

/// What macros are expanded against: the translated net, and the
/// configuration for channel, group and protocol built-ins.
#[derive(Debug, Clone, Copy)]
pub struct Model<'a> {
    pub component: Option<&'a Component>,
    pub net: &'a InterlacedNet,
}

const MAX_DEPTH: usize = 64;

struct Expander<'a> {
    lib: &'a MacroLibrary,
    model: Model<'a>,
    stack: Vec<String>,
}

/// Expands one formula written in the file syntax.
pub fn expand_macros(formula: &str, lib: &MacroLibrary, model: Model) -> Result<CtlFormula, AnalysisError> {
    let toks = lex(1, formula)?;
    let mut p = Parser { toks: &toks, pos: 0, line: 1 };
    let f = p.formula()?;
    p.done()?;
    Expander { lib, model, stack: Vec::new() }.expand(&f, &Env::new())
}

impl MacroLibrary {
    /// Every formula of the library, flattened: (name, source text, formula).
    pub fn expand_all(&self, model: Model) -> Result<Vec<(String, String, CtlFormula)>, AnalysisError> {
        self.formulas
            .iter()
            .map(|nf| {
                let f = Expander { lib: self, model, stack: Vec::new() }.expand(&nf.body, &Env::new())?;
                Ok((nf.name.clone(), nf.text.clone(), f))
            })
            .collect()
    }
}

impl Expander<'_> {
    fn expand(&mut self, f: &Fx, env: &Env) -> Result<CtlFormula, AnalysisError> {
        use CtlFormula as C;
        Ok(match f {
            Fx::Bool(b) => C::Const(*b),
            Fx::Not(g) => C::not(self.expand(g, env)?),
            Fx::And(a, b) => C::and(vec![self.expand(a, env)?, self.expand(b, env)?]),
            Fx::Or(a, b) => C::or(vec![self.expand(a, env)?, self.expand(b, env)?]),
            Fx::Implies(a, b) => C::Implies(Box::new(self.expand(a, env)?), Box::new(self.expand(b, env)?)),
            Fx::Temporal(op, g) => {
                let g = Box::new(self.expand(g, env)?);
                match op {
                    Temporal::Ex => C::Ex(g),
                    Temporal::Ax => C::Ax(g),
                    Temporal::Ef => C::Ef(g),
                    Temporal::Af => C::Af(g),
                    Temporal::Eg => C::Eg(g),
                    Temporal::Ag => C::Ag(g),
                }
            }
            Fx::Until { all, hold, goal } => {
                let (a, b) = (Box::new(self.expand(hold, env)?), Box::new(self.expand(goal, env)?));
                if *all {
                    C::Au(a, b)
                } else {
                    C::Eu(a, b)
                }
            }
            Fx::Quant { all, var, lo, hi, body } => {
                let lo = eval_int(lo, env, &self.lib.constants)?;
                let hi = eval_int(hi, env, &self.lib.constants)?;
                if hi - lo > 100_000 {
                    return Err(AnalysisError::Expansion(format!("quantifier domain of `{var}` is too large")));
                }
                let mut parts = Vec::new();
                for v in lo..=hi {
                    let mut inner = env.clone();
                    inner.insert(var.clone(), Value::Int(v));
                    parts.push(self.expand(body, &inner)?);
                }
                if *all {
                    C::and(parts)
                } else {
                    C::or(parts)
                }
            }
            Fx::Call { name, args, cmp } => {
                let vals: Vec<Value> =
                    args.iter().map(|a| eval(a, env, &self.lib.constants)).collect::<Result<_, _>>()?;
                let cmp = match cmp {
                    Some((op, t)) => {
                        let k = eval_int(t, env, &self.lib.constants)?;
                        let k = u32::try_from(k)
                            .map_err(|_| AnalysisError::Expansion(format!("token bound {k} is negative")))?;
                        Some((*op, k))
                    }
                    None => None,
                };
                self.call(name, &vals, cmp)?
            }
        })
    }

    fn call(&mut self, name: &str, args: &[Value], cmp: Option<(CmpOp, u32)>) -> Result<CtlFormula, AnalysisError> {
        if let Some(m) = self.lib.macros.get(name) {
            if cmp.is_some() {
                return Err(AnalysisError::Expansion(format!("macro `{name}` is a formula and cannot be compared")));
            }
            if m.params.len() != args.len() {
                return Err(AnalysisError::ArityMismatch {
                    name: name.into(),
                    expected: m.params.len(),
                    got: args.len(),
                });
            }
            if self.stack.iter().any(|s| s == name) || self.stack.len() >= MAX_DEPTH {
                let mut cycle = self.stack.clone();
                cycle.push(name.into());
                return Err(AnalysisError::RecursiveMacro(cycle.join(" -> ")));
            }
            let env: Env = m.params.iter().cloned().zip(args.iter().cloned()).collect();
            self.stack.push(name.into());
            let r = self.expand(&m.body, &env);
            self.stack.pop();
            return r;
        }
        if let Some(f) = self.builtin(name, args)? {
            if cmp.is_some() {
                return Err(AnalysisError::Expansion(format!("built-in `{name}` cannot be compared")));
            }
            return Ok(f);
        }
        let id = if args.is_empty() {
            name.to_string()
        } else {
            let a: Vec<String> = args.iter().map(Value::to_string).collect();
            format!("{name}[{}]", a.join(","))
        };
        let place = names::resolve(self.model.net, &id).ok_or_else(|| AnalysisError::UnknownMacro(id.clone()))?;
        let (op, k) = cmp.unwrap_or((CmpOp::Ge, 1));
        Ok(CtlFormula::tokens(place, op, k))
    }

    fn builtin(&self, name: &str, args: &[Value]) -> Result<Option<CtlFormula>, AnalysisError> {
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(AnalysisError::ArityMismatch { name: name.into(), expected: n, got: args.len() })
            }
        };
        let name_arg = |k: usize| match &args[k] {
            Value::Name(s) => s.clone(),
            Value::Int(v) => v.to_string(),
        };
        Ok(Some(match name {
            "deadlock" => {
                arity(0)?;
                CtlFormula::Atom(StateAtom::Deadlock)
            }
            "final" => {
                arity(0)?;
                CtlFormula::Atom(StateAtom::Final)
            }
            "enabled" | "dead" => {
                arity(1)?;
                let t = name_arg(0);
                let id = names::resolve_transition(self.model.net, &t)
                    .ok_or_else(|| AnalysisError::UnknownTransition(t.clone()))?;
                let f = CtlFormula::Atom(StateAtom::Enabled(id.to_string()));
                if name == "dead" {
                    CtlFormula::not(f)
                } else {
                    f
                }
            }
            "sender_prepared" | "receiver_prepared" | "rendezvous" | "buffer_full" | "buffer_empty" => {
                arity(1)?;
                let ch = self.channel(&name_arg(0))?;
                match name {
                    "sender_prepared" => self.prepared(&ch.sender.path())?,
                    "receiver_prepared" => self.prepared(&ch.receiver.path())?,
                    "rendezvous" => {
                        CtlFormula::and(vec![self.prepared(&ch.sender.path())?, self.prepared(&ch.receiver.path())?])
                    }
                    "buffer_full" => self.buffer(ch, true)?,
                    _ => self.buffer(ch, false)?,
                }
            }
            "sender_blocked" | "receiver_blocked" => {
                arity(1)?;
                self.blocked(&name_arg(0), name == "sender_blocked")?
            }
            "port_pair_prepared" => {
                arity(1)?;
                let ch = self.channel(&name_arg(0))?;
                CtlFormula::and(vec![self.prepared(&ch.sender.path())?, self.prepared(&ch.receiver.path())?])
            }
            "group_prepared" => {
                arity(1)?;
                let path = name_arg(0);
                let (u, port) = self.port(&path)?;
                let kind =
                    port.group_kind().ok_or_else(|| AnalysisError::UnknownPort(format!("{path} is not a group")))?;
                let members: Vec<CtlFormula> = port
                    .members()
                    .iter()
                    .map(|m| self.prepared(&format!("{}.{}.{}", u.id, port.id, m.id)))
                    .collect::<Result<_, _>>()?;
                match kind {
                    GroupKind::All => CtlFormula::and(members),
                    GroupKind::Any => CtlFormula::or(members),
                }
            }
            "holding" => {
                arity(3)?;
                self.holding(&name_arg(0), &name_arg(1), &name_arg(2))?
            }
            _ => return Ok(None),
        }))
    }

    fn component(&self) -> Result<&Component, AnalysisError> {
        self.model.component.ok_or_else(|| AnalysisError::Expansion("channel macros need the configuration".into()))
    }

    fn place(&self, id: &str) -> Result<String, AnalysisError> {
        names::resolve(self.model.net, id).map(str::to_string).ok_or_else(|| AnalysisError::UnknownPlace(id.into()))
    }

    fn prepared(&self, path: &str) -> Result<CtlFormula, AnalysisError> {
        Ok(CtlFormula::marked(self.place(&names::port_prepared(path))?))
    }

    /// A channel by id, or the channel attached to a port path.
    fn channel(&self, key: &str) -> Result<&crate::ahcl::Channel, AnalysisError> {
        let c = self.component()?;
        c.channels
            .iter()
            .find(|ch| ch.id.name == key)
            .or_else(|| c.channels.iter().find(|ch| ch.receiver.path() == key || ch.sender.path() == key))
            .ok_or_else(|| AnalysisError::UnknownChannel(key.into()))
    }

    /// Splits `unit.port` (unit ids may contain dots inside brackets).
    fn port(&self, path: &str) -> Result<(&Unit, &Port), AnalysisError> {
        let c = self.component()?;
        let parts = split_path(path);
        let unknown = || AnalysisError::UnknownPort(path.into());
        if parts.len() != 2 {
            return Err(unknown());
        }
        let u = c.unit(&parts[0]).ok_or_else(unknown)?;
        let p = u.port(&parts[1]).ok_or_else(unknown)?;
        Ok((u, p))
    }

    fn buffer(&self, ch: &crate::ahcl::Channel, full: bool) -> Result<CtlFormula, AnalysisError> {
        let c = &ch.id.name;
        Ok(match (ch.mode, full) {
            (ChannelMode::Buffered(_), true) => CtlFormula::empty(self.place(&names::chan_buffer_free(c))?),
            (ChannelMode::Buffered(_), false) => CtlFormula::empty(self.place(&names::chan_buffer_used(c))?),
            // nothing is ever stored in a rendezvous channel
            (_, full) => CtlFormula::Const(!full),
        })
    }

    fn channel_blocked(&self, ch: &crate::ahcl::Channel, sender: bool) -> Result<CtlFormula, AnalysisError> {
        let (me, peer) = if sender {
            (self.prepared(&ch.sender.path())?, self.prepared(&ch.receiver.path())?)
        } else {
            (self.prepared(&ch.receiver.path())?, self.prepared(&ch.sender.path())?)
        };
        let stuck = match ch.mode {
            ChannelMode::Synchronous => CtlFormula::not(peer),
            ChannelMode::Buffered(_) => self.buffer(ch, sender)?,
            ChannelMode::Ready => {
                let open = CtlFormula::marked(self.place(&names::chan_ready_is_open(&ch.id.name))?);
                CtlFormula::or(vec![CtlFormula::not(peer), CtlFormula::not(open)])
            }
        };
        Ok(CtlFormula::and(vec![me, stuck]))
    }

    /// Blocked side of a channel, a port or a group. An any-group waits
    /// while every member waits; an all-group while some member does.
    /// An unconnected port talks to the environment and never blocks.
    fn blocked(&self, key: &str, sender: bool) -> Result<CtlFormula, AnalysisError> {
        let c = self.component()?;
        if let Some(ch) = c.channels.iter().find(|ch| ch.id.name == key) {
            return self.channel_blocked(ch, sender);
        }
        let by_port = |path: &str| {
            c.channels.iter().find(|ch| if sender { ch.sender.path() == path } else { ch.receiver.path() == path })
        };
        if let Some(ch) = by_port(key) {
            return self.channel_blocked(ch, sender);
        }
        let (u, port) = self.port(key)?;
        let want = if sender { Direction::Output } else { Direction::Input };
        if port.direction != want {
            return Err(AnalysisError::UnknownPort(format!("{key} has the wrong direction")));
        }
        let Some(kind) = port.group_kind() else {
            return Ok(CtlFormula::Const(false));
        };
        let mut parts = Vec::new();
        for m in port.members() {
            let path = format!("{}.{}.{}", u.id, port.id, m.id);
            parts.push(match by_port(&path) {
                Some(ch) => self.channel_blocked(ch, sender)?,
                None => CtlFormula::Const(false),
            });
        }
        Ok(match kind {
            GroupKind::Any => CtlFormula::and(parts),
            GroupKind::All => CtlFormula::or(parts),
        })
    }

    /// Unit `u` holds what it obtained through `get` until it starts to
    /// hand it over through `put`: either a `get` activation has transferred
    /// but not yet stopped, or control sits in the protocol region between
    /// the stop of a `get` activation and the start of a `put` activation.
    fn holding(&self, unit: &str, get: &str, put: &str) -> Result<CtlFormula, AnalysisError> {
        let c = self.component()?;
        let u = c.unit(unit).ok_or_else(|| AnalysisError::UnknownPort(format!("{unit}.{get}")))?;
        let gp = u.port(get).ok_or_else(|| AnalysisError::UnknownPort(format!("{unit}.{get}")))?;
        u.port(put).ok_or_else(|| AnalysisError::UnknownPort(format!("{unit}.{put}")))?;
        let acts = activations(u);
        let of = |p: &str| -> Vec<&Activation> { acts.iter().filter(|a| a.port == p).collect() };
        let net = self.model.net;
        let control = |id: &str| {
            id.contains(&format!("[{unit}:"))
                || id == names::process_started(unit)
                || id == names::process_finished(unit)
        };
        let trans = |role: &str, a: &Activation| {
            let id = names::control(role, unit, &a.path);
            names::resolve_transition(net, &id).map(str::to_string).ok_or(AnalysisError::UnknownTransition(id))
        };

        let mut ends = BTreeSet::new();
        for a in of(put) {
            let t = trans("activate_start", a)?;
            ends.extend(net.inputs(&t).map(|(p, _)| p.to_string()).filter(|p| control(p)));
        }
        let mut region = BTreeSet::new();
        let mut queue = VecDeque::new();
        let path = format!("{unit}.{get}");
        let mut transferred =
            vec![if gp.group_kind().is_some() { names::group_complete(&path) } else { names::port_complete(&path) }];
        transferred.push(format!("sp_received[{path}]"));
        for m in gp.members() {
            transferred.push(format!("any_group_port_activated[{path}.{}]", m.id));
        }
        let transferred: Vec<String> =
            transferred.iter().filter_map(|p| names::resolve(net, p)).map(str::to_string).collect();
        let mut pending = Vec::new();
        for a in of(get) {
            let on = self.place(&names::control("activate_on", unit, &a.path))?;
            pending.push(CtlFormula::and(vec![
                CtlFormula::marked(on),
                CtlFormula::or(transferred.iter().map(|p| CtlFormula::marked(p.clone())).collect()),
            ]));
            let t = trans("activate_stop", a)?;
            for (p, _) in net.outputs(&t) {
                if control(p) && region.insert(p.to_string()) {
                    queue.push_back(p.to_string());
                }
            }
        }
        while let Some(p) = queue.pop_front() {
            if ends.contains(&p) {
                continue;
            }
            for (t, _) in net.consumers(&p) {
                for (q, _) in net.outputs(t) {
                    if control(q) && region.insert(q.to_string()) {
                        queue.push_back(q.to_string());
                    }
                }
            }
        }
        let mut parts = pending;
        parts.extend(region.into_iter().map(CtlFormula::marked));
        Ok(CtlFormula::or(parts))
    }
}

/// Splits a dotted path at top-level dots: `phil[1].lf_get` gives
/// `phil[1]` and `lf_get`.
fn split_path(path: &str) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut depth = 0;
    for c in path.chars() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            '.' if depth == 0 => {
                out.push(String::new());
                continue;
            }
            _ => {}
        }
        out.last_mut().unwrap().push(c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statements_join_continuations() {
        let s = statements("let N = 3\n# note\nf :: a &\n  b\ng: EF (a\n | b)\n");
        assert_eq!(s.len(), 3);
        assert_eq!(s[1], (3, "f :: a & b".to_string()));
        assert_eq!(s[2].1, "g: EF (a | b)");
    }

    #[test]
    fn mod_binds_loosest() {
        let toks = lex(1, "f + 1 mod N").unwrap();
        let t = Parser { toks: &toks, pos: 0, line: 1 }.term().unwrap();
        let consts = BTreeMap::from([("N".to_string(), 5)]);
        let env = Env::from([("f".to_string(), Value::Int(4))]);
        assert_eq!(eval_int(&t, &env, &consts).unwrap(), 0);
    }

    #[test]
    fn paths_render_with_indices() {
        let toks = lex(1, "phil[p - 1 mod 3].lf_get").unwrap();
        let t = Parser { toks: &toks, pos: 0, line: 1 }.term().unwrap();
        let env = Env::from([("p".to_string(), Value::Int(0))]);
        assert_eq!(eval(&t, &env, &BTreeMap::new()).unwrap(), Value::Name("phil[2].lf_get".into()));
        assert_eq!(split_path("phil[2].lf_get"), vec!["phil[2]", "lf_get"]);
    }

    #[test]
    fn file_sections() {
        let lib = MacroLibrary::parse("let N = 2\nm[x] :: p[x]\nbad: EF m[1]\nAG !deadlock").unwrap();
        assert_eq!(lib.constants["N"], 2);
        assert_eq!(lib.macros["m"].params, vec!["x"]);
        assert_eq!(lib.formulas[0].name, "bad");
        assert_eq!(lib.formulas[1].name, "AG !deadlock");
        let mut fixed = MacroLibrary::with_constants(&[("N", 4)]);
        fixed.add_file("let N = 5\nlet M = N + 1").unwrap();
        assert_eq!((fixed.constants["N"], fixed.constants["M"]), (4, 5));
    }

    #[test]
    fn parse_errors_carry_lines() {
        let e = MacroLibrary::parse("ok: true\nEF (a &").unwrap_err();
        assert!(matches!(e, AnalysisError::Parse { line: 2, .. }), "{e:?}");
    }
}
