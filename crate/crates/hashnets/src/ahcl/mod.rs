//! Abstract Hash Configuration Language: AST, parser, printer, validation.
//!
//! The concrete grammar is documented in `docs/ahcl.md`.

mod expand;
mod lexer;
mod parser;
mod pretty;
mod validate;

pub use parser::{parse_configuration, parse_configuration_with, ParseError, ParseErrorKind};
pub use pretty::pretty_print;
pub use validate::{validate_configuration, Diagnostic, Severity, ValidationReport};

use crate::behavior::Action;
use std::fmt;
use std::hash::{Hash, Hasher};

/// Byte range in the original source text.
///
/// Spans never take part in equality or hashing, so ASTs built by hand
/// compare equal to parsed ones.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    /// 1-based line and column of `start` in `text`.
    pub fn line_col(&self, text: &str) -> (usize, usize) {
        line_col(text, self.start)
    }
}

pub(crate) fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(offset, |nl| offset - nl - 1) + 1;
    (line, col)
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl Hash for Span {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn new(name: impl Into<String>) -> Self {
        Ident { name: name.into(), span: Span::default() }
    }

    pub fn at(name: impl Into<String>, span: Span) -> Self {
        Ident { name: name.into(), span }
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl From<&str> for Ident {
    fn from(s: &str) -> Self {
        Ident::new(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Input,
    Output,
    /// Shared endpoint of a collective group, activated with `do`.
    Collective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupKind {
    Any,
    All,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Multiplicity {
    Single,
    Group { kind: GroupKind, members: Vec<Port> },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Port {
    pub id: Ident,
    pub direction: Direction,
    pub multiplicity: Multiplicity,
    pub stream: bool,
    pub nesting: u32,
}

impl Port {
    pub fn single(id: &str, direction: Direction) -> Self {
        Port { id: Ident::new(id), direction, multiplicity: Multiplicity::Single, stream: false, nesting: 0 }
    }

    pub fn streamed(mut self, nesting: u32) -> Self {
        self.stream = true;
        self.nesting = nesting;
        if let Multiplicity::Group { members, .. } = &mut self.multiplicity {
            for m in members {
                m.stream = true;
                m.nesting = nesting;
            }
        }
        self
    }

    pub fn group(id: &str, direction: Direction, kind: GroupKind, members: &[&str]) -> Self {
        Port {
            id: Ident::new(id),
            direction,
            multiplicity: Multiplicity::Group {
                kind,
                members: members.iter().map(|m| Port::single(m, direction)).collect(),
            },
            stream: false,
            nesting: 0,
        }
    }

    pub fn members(&self) -> &[Port] {
        match &self.multiplicity {
            Multiplicity::Single => &[],
            Multiplicity::Group { members, .. } => members,
        }
    }

    pub fn group_kind(&self) -> Option<GroupKind> {
        match &self.multiplicity {
            Multiplicity::Single => None,
            Multiplicity::Group { kind, .. } => Some(*kind),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Protocol {
    pub semaphores: Vec<Ident>,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Unit {
    pub id: Ident,
    pub repetitive: bool,
    pub ports: Vec<Port>,
    pub protocol: Protocol,
}

impl Unit {
    pub fn new(id: &str, ports: Vec<Port>, action: Action) -> Self {
        Unit { id: Ident::new(id), repetitive: false, ports, protocol: Protocol { semaphores: vec![], action } }
    }

    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.id.name == name)
    }
}

/// `unit.port` or `unit.group.member`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PortRef {
    pub unit: Ident,
    pub port: Ident,
    pub member: Option<Ident>,
    pub span: Span,
}

impl PortRef {
    pub fn new(unit: &str, port: &str, member: Option<&str>) -> Self {
        PortRef { unit: unit.into(), port: port.into(), member: member.map(Ident::new), span: Span::default() }
    }

    /// Globally unique dotted name.
    pub fn path(&self) -> String {
        match &self.member {
            Some(m) => format!("{}.{}.{}", self.unit, self.port, m),
            None => format!("{}.{}", self.unit, self.port),
        }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.path())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelMode {
    Synchronous,
    /// Slot count; `None` takes the translation default.
    Buffered(Option<u32>),
    Ready,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Channel {
    pub id: Ident,
    pub sender: PortRef,
    pub receiver: PortRef,
    pub mode: ChannelMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CollectiveGroup {
    pub id: Ident,
    pub members: Vec<PortRef>,
    /// Taken from the first member's declaration.
    pub nesting: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Component {
    pub name: Ident,
    pub units: Vec<Unit>,
    pub channels: Vec<Channel>,
    pub collectives: Vec<CollectiveGroup>,
}

impl Component {
    pub fn new(name: &str) -> Self {
        Component { name: name.into(), units: vec![], channels: vec![], collectives: vec![] }
    }

    pub fn unit(&self, name: &str) -> Option<&Unit> {
        self.units.iter().find(|u| u.id.name == name)
    }

    /// Resolves a reference to the declared port (or group member).
    pub fn resolve(&self, r: &PortRef) -> Option<&Port> {
        let port = self.unit(&r.unit.name)?.port(&r.port.name)?;
        match &r.member {
            None => Some(port),
            Some(m) => port.members().iter().find(|p| p.id.name == m.name),
        }
    }
}
