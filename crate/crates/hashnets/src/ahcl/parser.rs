use super::expand::expand;
use super::lexer::{lex, source_span, Tok, Token};
use super::*;
use crate::behavior::{Action, Conjunction, Polarity, StreamPredicate};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax {
        expected: Vec<String>,
        found: String,
    },
    DuplicateIdentifier(String),
    /// Bad parameter list, iterator declaration or replicated block.
    Expansion(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
    pub span: Span,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.line, self.column)?;
        match &self.kind {
            ParseErrorKind::Syntax { expected, found } => {
                if expected.len() == 1 {
                    write!(f, "expected {}, found {found}", expected[0])
                } else {
                    write!(f, "expected one of {}, found {found}", expected.join(", "))
                }
            }
            ParseErrorKind::DuplicateIdentifier(n) => write!(f, "duplicate identifier `{n}`"),
            ParseErrorKind::Expansion(m) => f.write_str(m),
        }
    }
}

pub fn parse_configuration(text: &str) -> Result<Component, ParseError> {
    parse_configuration_with(text, &[])
}

/// Parses with component parameters overridden, e.g. `[("N", 4)]`.
pub fn parse_configuration_with(text: &str, overrides: &[(&str, i64)]) -> Result<Component, ParseError> {
    let err_at = |offset: usize, kind: ParseErrorKind| {
        let (line, column) = line_col(text, offset);
        ParseError { kind, line, column, span: Span::new(offset, offset) }
    };
    let overrides: Vec<(String, i64)> = overrides.iter().map(|(n, v)| (n.to_string(), *v)).collect();
    let expanded = expand(text, &overrides).map_err(|e| err_at(e.offset, ParseErrorKind::Expansion(e.message)))?;
    let tokens = lex(&expanded.text).map_err(|(at, ch)| {
        err_at(
            expanded.origin[at],
            ParseErrorKind::Syntax { expected: vec!["a token".into()], found: format!("`{ch}`") },
        )
    })?;
    let mut p = Parser { tokens, pos: 0, origin: &expanded.origin, src: text };
    p.component()
}

const ACTION_START: [&str; 11] =
    ["skip", "seq", "par", "alt", "repeat", "if", "signal", "wait", "do", "(", "identifier"];

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    origin: &'a [usize],
    src: &'a str,
}

type R<T> = Result<T, ParseError>;

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.tokens[(self.pos + k).min(self.tokens.len() - 1)].tok
    }

    fn span(&self) -> Span {
        let t = &self.tokens[self.pos];
        source_span(self.origin, t.start, t.end)
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let span = self.span();
        let (line, column) = line_col(self.src, span.start);
        let expected = expected.iter().map(|e| quote(e)).collect();
        ParseError { kind: ParseErrorKind::Syntax { expected, found: self.peek().describe() }, line, column, span }
    }

    fn duplicate(&self, id: &Ident) -> ParseError {
        let (line, column) = line_col(self.src, id.span.start);
        ParseError { kind: ParseErrorKind::DuplicateIdentifier(id.name.clone()), line, column, span: id.span }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Word(x) if x == w)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> R<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(&[s]))
        }
    }

    fn expect_word(&mut self, w: &str) -> R<()> {
        if self.eat_word(w) {
            Ok(())
        } else {
            Err(self.error(&[w]))
        }
    }

    fn ident(&mut self) -> R<Ident> {
        match self.peek().clone() {
            Tok::Word(w) => {
                let span = self.span();
                self.pos += 1;
                Ok(Ident::at(w, span))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn int(&mut self) -> R<u32> {
        match *self.peek() {
            Tok::Int(n) => {
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.error(&["integer"])),
        }
    }

    fn component(&mut self) -> R<Component> {
        self.expect_word("component")?;
        let name = self.ident()?;
        self.expect_sym("{")?;
        let mut c = Component { name, units: vec![], channels: vec![], collectives: vec![] };
        let mut units = BTreeSet::new();
        let mut channels = BTreeSet::new();
        let mut groups = BTreeSet::new();
        loop {
            if self.eat_sym("}") {
                break;
            }
            if self.is_word("unit") {
                let u = self.unit()?;
                if !units.insert(u.id.name.clone()) {
                    return Err(self.duplicate(&u.id));
                }
                c.units.push(u);
            } else if self.is_word("connect") {
                let ch = self.channel(c.channels.len())?;
                if !channels.insert(ch.id.name.clone()) {
                    return Err(self.duplicate(&ch.id));
                }
                c.channels.push(ch);
            } else if self.is_word("collective") {
                let g = self.collective()?;
                if !groups.insert(g.id.name.clone()) {
                    return Err(self.duplicate(&g.id));
                }
                c.collectives.push(g);
            } else {
                return Err(self.error(&["unit", "connect", "collective", "}"]));
            }
        }
        if *self.peek() != Tok::Eof {
            return Err(self.error(&["end of input"]));
        }
        let nestings: Vec<u32> = c
            .collectives
            .iter()
            .map(|g| g.members.first().and_then(|m| c.resolve(m)).map_or(0, |p| p.nesting))
            .collect();
        for (g, n) in c.collectives.iter_mut().zip(nestings) {
            g.nesting = n;
        }
        Ok(c)
    }

    fn unit(&mut self) -> R<Unit> {
        self.expect_word("unit")?;
        let id = self.ident()?;
        let repetitive = self.eat_word("repetitive");
        self.expect_sym("{")?;
        let mut u = Unit { id, repetitive, ports: vec![], protocol: Protocol::default() };
        if self.eat_word("ports") {
            self.expect_sym("{")?;
            let mut names = BTreeSet::new();
            while !self.eat_sym("}") {
                let p = self.port()?;
                if !names.insert(p.id.name.clone()) {
                    return Err(self.duplicate(&p.id));
                }
                u.ports.push(p);
            }
        }
        if self.eat_word("protocol") {
            self.expect_sym("{")?;
            let mut sems = BTreeSet::new();
            while self.is_word("sem") && !matches!(self.peek_at(1), Tok::Sym("!" | "?")) {
                self.pos += 1;
                loop {
                    let s = self.ident()?;
                    if !sems.insert(s.name.clone()) {
                        return Err(self.duplicate(&s));
                    }
                    u.protocol.semaphores.push(s);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(";")?;
            }
            if !self.is_sym("}") {
                u.protocol.action = self.action()?;
            }
            self.eat_sym(";");
            self.expect_sym("}")?;
        }
        if !self.eat_sym("}") {
            return Err(self.error(&["ports", "protocol", "}"]));
        }
        Ok(u)
    }

    fn stream_spec(&mut self) -> R<(bool, u32)> {
        if !self.eat_word("stream") {
            return Ok((false, 0));
        }
        if self.eat_sym("(") {
            let n = self.int()?;
            self.expect_sym(")")?;
            Ok((true, n))
        } else {
            Ok((true, 1))
        }
    }

    fn port(&mut self) -> R<Port> {
        let direction = if self.eat_word("in") {
            Direction::Input
        } else if self.eat_word("out") {
            Direction::Output
        } else if self.eat_word("collective") {
            Direction::Collective
        } else {
            return Err(self.error(&["in", "out", "collective", "}"]));
        };
        let group = direction != Direction::Collective
            && self.is_word("group")
            && matches!(self.peek_at(1), Tok::Word(_))
            && matches!(self.peek_at(2), Tok::Word(w) if w == "any" || w == "all");
        let mut port = if group {
            self.pos += 1;
            let id = self.ident()?;
            let kind =
                if self.eat_word("any") { GroupKind::Any } else { self.expect_word("all").map(|_| GroupKind::All)? };
            self.expect_sym("{")?;
            let mut members = Vec::new();
            let mut names = BTreeSet::new();
            loop {
                let m = self.ident()?;
                if !names.insert(m.name.clone()) {
                    return Err(self.duplicate(&m));
                }
                members.push(Port { id: m, direction, multiplicity: Multiplicity::Single, stream: false, nesting: 0 });
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym("}")?;
            Port { id, direction, multiplicity: Multiplicity::Group { kind, members }, stream: false, nesting: 0 }
        } else {
            Port { id: self.ident()?, direction, multiplicity: Multiplicity::Single, stream: false, nesting: 0 }
        };
        let (stream, nesting) = self.stream_spec()?;
        port.stream = stream;
        port.nesting = nesting;
        if let Multiplicity::Group { members, .. } = &mut port.multiplicity {
            for m in members {
                m.stream = stream;
                m.nesting = nesting;
            }
        }
        self.expect_sym(";")?;
        Ok(port)
    }

    fn port_ref(&mut self) -> R<PortRef> {
        let start = self.span();
        let unit = self.ident()?;
        self.expect_sym(".")?;
        let port = self.ident()?;
        let member = if self.eat_sym(".") { Some(self.ident()?) } else { None };
        let end = self.tokens[self.pos - 1].end;
        let span = Span::new(start.start, source_span(self.origin, end - 1, end).end);
        Ok(PortRef { unit, port, member, span })
    }

    fn channel(&mut self, index: usize) -> R<Channel> {
        let kw = self.span();
        self.expect_word("connect")?;
        let id = if matches!(self.peek_at(1), Tok::Sym(":")) {
            let id = self.ident()?;
            self.pos += 1;
            id
        } else {
            Ident::at(format!("c{index}"), kw)
        };
        let sender = self.port_ref()?;
        self.expect_sym("->")?;
        let receiver = self.port_ref()?;
        let mode = if self.eat_word("mode") {
            if self.eat_word("synchronous") {
                ChannelMode::Synchronous
            } else if self.eat_word("ready") {
                ChannelMode::Ready
            } else if self.eat_word("buffered") {
                if self.eat_sym("(") {
                    let n = self.int()?;
                    self.expect_sym(")")?;
                    ChannelMode::Buffered(Some(n))
                } else {
                    ChannelMode::Buffered(None)
                }
            } else {
                return Err(self.error(&["synchronous", "buffered", "ready"]));
            }
        } else {
            ChannelMode::Synchronous
        };
        if !self.eat_sym(";") {
            return Err(self.error(if matches!(self.peek(), Tok::Word(w) if w != "mode") {
                &[";"]
            } else {
                &["mode", ";"]
            }));
        }
        Ok(Channel { id, sender, receiver, mode })
    }

    fn collective(&mut self) -> R<CollectiveGroup> {
        self.expect_word("collective")?;
        let id = self.ident()?;
        self.expect_sym("{")?;
        let mut members = Vec::new();
        loop {
            members.push(self.port_ref()?);
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym("}")?;
        self.eat_sym(";");
        Ok(CollectiveGroup { id, members, nesting: 0 })
    }

    fn action(&mut self) -> R<Action> {
        let next_is_polarity = matches!(self.peek_at(1), Tok::Sym("!" | "?"));
        let word = match self.peek() {
            Tok::Word(w) => w.clone(),
            Tok::Sym("(") => {
                self.pos += 1;
                let a = self.action()?;
                self.expect_sym(")")?;
                return Ok(a);
            }
            _ => return Err(self.error(&ACTION_START)),
        };
        if next_is_polarity {
            let id = self.ident()?;
            let pol = if self.eat_sym("!") { Polarity::Send } else { self.expect_sym("?").map(|_| Polarity::Recv)? };
            return Ok(Action::Activate(id, pol));
        }
        let kw = self.span();
        match word.as_str() {
            "skip" => {
                self.pos += 1;
                Ok(Action::Skip)
            }
            "seq" | "par" | "alt" => {
                self.pos += 1;
                self.expect_sym("{")?;
                let mut items = Vec::new();
                while !self.eat_sym("}") {
                    items.push(self.action()?);
                    if !self.eat_sym(";") && !self.is_sym("}") {
                        return Err(self.error(&[";", "}"]));
                    }
                }
                Ok(match word.as_str() {
                    "seq" => Action::Seq(items),
                    "par" => Action::Par(items),
                    _ => Action::Alt(items),
                })
            }
            "repeat" => {
                self.pos += 1;
                let body = Box::new(self.action()?);
                if self.eat_word("until") {
                    Ok(Action::RepeatUntil(body, self.predicate()?))
                } else if self.eat_word("counter") {
                    let at = self.span();
                    let n = self.int()?;
                    Ok(Action::RepeatCounter(body, n, Span::new(kw.start, at.end)))
                } else {
                    Ok(Action::RepeatForever(body))
                }
            }
            "if" => {
                self.pos += 1;
                let p = self.predicate()?;
                self.expect_word("then")?;
                let a = self.action()?;
                let b = if self.eat_word("else") { self.action()? } else { Action::Skip };
                Ok(Action::If(p, Box::new(a), Box::new(b)))
            }
            "signal" | "wait" | "do" => {
                self.pos += 1;
                let id = self.ident()?;
                Ok(match word.as_str() {
                    "signal" => Action::Signal(id),
                    "wait" => Action::Wait(id),
                    _ => Action::Do(id),
                })
            }
            _ => {
                self.pos += 1;
                Err(self.error(&["!", "?"]))
            }
        }
    }

    fn predicate(&mut self) -> R<StreamPredicate> {
        let start = self.span().start;
        let mut disjuncts = Vec::new();
        loop {
            self.disjunct(&mut disjuncts)?;
            if !self.eat_sym("|") {
                break;
            }
        }
        let end = self.tokens[self.pos - 1].end;
        Ok(StreamPredicate { disjuncts, span: Span::new(start, source_span(self.origin, end - 1, end).end) })
    }

    fn disjunct(&mut self, out: &mut Vec<Conjunction>) -> R<()> {
        if self.eat_sym("(") {
            let inner = self.predicate()?;
            self.expect_sym(")")?;
            out.extend(inner.disjuncts);
            return Ok(());
        }
        let bracketed = self.eat_sym("<");
        let mut ports = vec![self.ident().map_err(|_| self.error(&["identifier", "<", "("]))?];
        while self.eat_sym("&") {
            ports.push(self.ident()?);
        }
        if bracketed {
            self.expect_sym(">")?;
        }
        out.push(Conjunction { bracketed, ports });
        Ok(())
    }
}

fn quote(s: &str) -> String {
    if s == "identifier" || s == "integer" || s.contains(' ') {
        s.to_string()
    } else {
        format!("`{s}`")
    }
}
