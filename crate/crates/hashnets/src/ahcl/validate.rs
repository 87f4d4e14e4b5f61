use super::*;
use crate::behavior::{Action, Polarity, StreamPredicate};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    /// `file:line:col: severity: message`
    pub fn render(&self, file: &str, text: &str) -> String {
        let (line, col) = self.span.line_col(text);
        format!("{file}:{line}:{col}: {}: {}", self.severity, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.diagnostics.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }

    /// Warnings do not block translation.
    pub fn is_translatable(&self) -> bool {
        self.errors().next().is_none()
    }
}

struct V<'a> {
    c: &'a Component,
    out: Vec<Diagnostic>,
}

impl V<'_> {
    fn error(&mut self, span: Span, message: String) {
        self.out.push(Diagnostic { severity: Severity::Error, span, message });
    }

    fn warn(&mut self, span: Span, message: String) {
        self.out.push(Diagnostic { severity: Severity::Warning, span, message });
    }

    fn ports(&mut self, u: &Unit) {
        for p in &u.ports {
            if p.stream && p.nesting == 0 {
                self.error(p.id.span, format!("stream port `{}` needs a nesting factor of at least 1", p.id));
            }
            if !p.stream && p.nesting != 0 {
                self.error(p.id.span, format!("non-stream port `{}` must have nesting factor 0", p.id));
            }
            for m in p.members() {
                if m.direction != p.direction || m.stream != p.stream || m.nesting != p.nesting {
                    self.error(m.id.span, format!("member `{}` must share the declaration of group `{}`", m.id, p.id));
                }
            }
            if p.members().is_empty() && p.group_kind().is_some() {
                self.error(p.id.span, format!("group `{}` has no members", p.id));
            }
        }
    }

    fn endpoint(&mut self, r: &PortRef) -> Option<&Port> {
        let Some(u) = self.c.unit(&r.unit.name) else {
            self.error(r.span, format!("unknown unit `{}`", r.unit));
            return None;
        };
        let Some(p) = u.port(&r.port.name) else {
            self.error(r.span, format!("unit `{}` has no port `{}`", r.unit, r.port));
            return None;
        };
        let port = match &r.member {
            None if p.group_kind().is_some() => {
                self.error(r.span, format!("`{r}` is a group; connect one of its members"));
                return None;
            }
            None => p,
            Some(m) => match p.members().iter().find(|x| x.id.name == m.name) {
                Some(x) => x,
                None => {
                    self.error(r.span, format!("group `{}.{}` has no member `{m}`", r.unit, r.port));
                    return None;
                }
            },
        };
        if port.direction == Direction::Collective {
            self.error(r.span, format!("collective port `{r}` cannot be connected by a channel"));
            return None;
        }
        Some(port)
    }

    fn channels(&mut self) {
        let c = self.c;
        for ch in &c.channels {
            let s = self.endpoint(&ch.sender).cloned();
            let r = self.endpoint(&ch.receiver).cloned();
            if let (Some(s), Some(r)) = (s, r) {
                if s.direction != Direction::Output || r.direction != Direction::Input {
                    self.error(
                        ch.sender.span,
                        format!("channel endpoints must be output→input (`{}` -> `{}`)", ch.sender, ch.receiver),
                    );
                }
                if s.nesting != r.nesting {
                    self.error(
                        ch.sender.span,
                        format!(
                            "nesting mismatch: `{}` has nesting factor {} but `{}` has {}",
                            ch.sender, s.nesting, ch.receiver, r.nesting
                        ),
                    );
                }
            }
            if ch.mode == ChannelMode::Buffered(Some(0)) {
                self.error(ch.id.span, format!("buffered channel `{}` needs at least one slot", ch.id));
            }
        }
    }

    fn collectives(&mut self) {
        let c = self.c;
        for g in &c.collectives {
            let mut units = BTreeSet::new();
            let mut nestings = BTreeSet::new();
            for m in &g.members {
                if !units.insert(m.unit.name.clone()) {
                    self.error(m.span, format!("collective `{}` has two members in unit `{}`", g.id, m.unit));
                }
                match c.resolve(m) {
                    Some(p) if p.direction == Direction::Collective => {
                        nestings.insert(p.nesting);
                    }
                    Some(_) => self.error(m.span, format!("`{m}` is not a collective port")),
                    None => self.error(m.span, format!("unknown collective port `{m}`")),
                }
            }
            if nestings.len() > 1 {
                self.error(g.id.span, format!("collective `{}` mixes nesting factors {:?}", g.id, nestings));
            }
        }
    }

    fn predicate(&mut self, u: &Unit, p: &StreamPredicate, d: u32) {
        for id in p.ports() {
            match u.port(&id.name) {
                None => self.error(id.span, format!("unknown port `{id}` in stream predicate of unit `{}`", u.id)),
                Some(port) if !port.stream => {
                    self.error(id.span, format!("`{id}` is not a stream port and cannot appear in a stream predicate"))
                }
                Some(port) if port.nesting <= d => self.warn(
                    id.span,
                    format!("`{id}` has nesting factor {} but is tested at loop depth {d}", port.nesting),
                ),
                Some(_) => {}
            }
        }
    }

    fn protocol(&mut self, u: &Unit) {
        let sems: BTreeSet<&str> = u.protocol.semaphores.iter().map(|s| s.name.as_str()).collect();
        let mut nodes = Vec::new();
        u.protocol.action.walk_with_depth(&mut |a, d| nodes.push((a, d)));
        for (a, d) in nodes {
            match a {
                Action::Activate(id, pol) => match u.port(&id.name) {
                    None => self.error(id.span, format!("unit `{}` has no port or group `{id}`", u.id)),
                    Some(p) => match (p.direction, pol) {
                        (Direction::Collective, _) => {
                            self.error(id.span, format!("collective port `{id}` is activated with `do`"))
                        }
                        (Direction::Input, Polarity::Send) => {
                            self.error(id.span, format!("`{id}` is an input; activate it with `{id}?`"))
                        }
                        (Direction::Output, Polarity::Recv) => {
                            self.error(id.span, format!("`{id}` is an output; activate it with `{id}!`"))
                        }
                        _ => {}
                    },
                },
                Action::Do(id) => match u.port(&id.name) {
                    Some(p) if p.direction == Direction::Collective => {}
                    Some(_) => self.error(id.span, format!("`do` needs a collective port, `{id}` is not one")),
                    None => self.error(id.span, format!("unit `{}` has no collective port `{id}`", u.id)),
                },
                Action::Signal(s) | Action::Wait(s) if !sems.contains(s.name.as_str()) => {
                    self.error(s.span, format!("semaphore `{s}` is not declared in unit `{}`", u.id))
                }
                Action::RepeatCounter(_, n, span) if *n < 1 => {
                    self.error(*span, format!("repeat counter must be at least 1, found {n}"))
                }
                Action::RepeatUntil(_, p) | Action::If(p, _, _) => self.predicate(u, p, d),
                _ => {}
            }
        }
    }
}

pub fn validate_configuration(c: &Component) -> ValidationReport {
    let mut v = V { c, out: Vec::new() };
    for u in &c.units {
        v.ports(u);
        v.protocol(u);
    }
    v.channels();
    v.collectives();
    ValidationReport { diagnostics: v.out }
}
