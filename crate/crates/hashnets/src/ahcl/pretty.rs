use super::*;
use crate::behavior::{Action, StreamPredicate};
use std::fmt::Write;

/// Canonical source text; parsing it yields the same AST.
pub fn pretty_print(c: &Component) -> String {
    let mut s = String::new();
    writeln!(s, "component {} {{", c.name).unwrap();
    for u in &c.units {
        unit(&mut s, u);
    }
    for ch in &c.channels {
        let mode = match ch.mode {
            ChannelMode::Synchronous => "synchronous".to_string(),
            ChannelMode::Ready => "ready".to_string(),
            ChannelMode::Buffered(None) => "buffered".to_string(),
            ChannelMode::Buffered(Some(b)) => format!("buffered({b})"),
        };
        writeln!(s, "  connect {}: {} -> {} mode {mode};", ch.id, ch.sender, ch.receiver).unwrap();
    }
    for g in &c.collectives {
        let members: Vec<String> = g.members.iter().map(PortRef::path).collect();
        writeln!(s, "  collective {} {{ {} }}", g.id, members.join(", ")).unwrap();
    }
    s.push_str("}\n");
    s
}

fn unit(s: &mut String, u: &Unit) {
    writeln!(s, "  unit {}{} {{", u.id, if u.repetitive { " repetitive" } else { "" }).unwrap();
    s.push_str("    ports {\n");
    for p in &u.ports {
        let dir = match p.direction {
            Direction::Input => "in",
            Direction::Output => "out",
            Direction::Collective => "collective",
        };
        let stream = if p.stream { format!(" stream({})", p.nesting) } else { String::new() };
        match &p.multiplicity {
            Multiplicity::Single => writeln!(s, "      {dir} {}{stream};", p.id).unwrap(),
            Multiplicity::Group { kind, members } => {
                let kind = if *kind == GroupKind::Any { "any" } else { "all" };
                let names: Vec<&str> = members.iter().map(|m| m.id.name.as_str()).collect();
                writeln!(s, "      {dir} group {} {kind} {{ {} }}{stream};", p.id, names.join(", ")).unwrap()
            }
        }
    }
    s.push_str("    }\n    protocol {\n");
    if !u.protocol.semaphores.is_empty() {
        let names: Vec<&str> = u.protocol.semaphores.iter().map(|i| i.name.as_str()).collect();
        writeln!(s, "      sem {};", names.join(", ")).unwrap();
    }
    writeln!(s, "      {}", action_text(&u.protocol.action)).unwrap();
    s.push_str("    }\n  }\n");
}

pub fn predicate_text(p: &StreamPredicate) -> String {
    let parts: Vec<String> = p
        .disjuncts
        .iter()
        .map(|c| {
            let names: Vec<&str> = c.ports.iter().map(|i| i.name.as_str()).collect();
            let inner = names.join(" & ");
            if c.bracketed {
                format!("<{inner}>")
            } else {
                inner
            }
        })
        .collect();
    parts.join(" | ")
}

/// Repeat and if bodies that end in an optional suffix get parentheses so
/// the suffix cannot attach to them.
fn body_text(a: &Action) -> String {
    match a {
        Action::RepeatUntil(..) | Action::RepeatCounter(..) | Action::RepeatForever(_) | Action::If(..) => {
            format!("({})", action_text(a))
        }
        _ => action_text(a),
    }
}

pub fn action_text(a: &Action) -> String {
    let list = |kw: &str, v: &[Action]| {
        let items: Vec<String> = v.iter().map(action_text).collect();
        if items.is_empty() {
            format!("{kw} {{ }}")
        } else {
            format!("{kw} {{ {} }}", items.join("; "))
        }
    };
    match a {
        Action::Skip => "skip".into(),
        Action::Seq(v) => list("seq", v),
        Action::Par(v) => list("par", v),
        Action::Alt(v) => list("alt", v),
        Action::RepeatUntil(b, p) => format!("repeat {} until {}", body_text(b), predicate_text(p)),
        Action::RepeatCounter(b, n, _) => format!("repeat {} counter {n}", body_text(b)),
        Action::RepeatForever(b) => format!("repeat {}", body_text(b)),
        Action::If(p, t, e) => format!("if {} then {} else {}", predicate_text(p), body_text(t), body_text(e)),
        Action::Signal(s) => format!("signal {s}"),
        Action::Wait(s) => format!("wait {s}"),
        Action::Activate(p, pol) => format!("{p}{}", pol.symbol()),
        Action::Do(g) => format!("do {g}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_fixture() {
        let src = "component C { unit u { ports { in a; out b stream(2); in group g all { x, y }; collective k stream(1); }
            protocol { sem s; seq { a?; repeat (repeat b! until b) counter 2; if <b & g> then (if b then b! else skip) else do k } } }
            unit v repetitive { ports { out p; } protocol { p! } }
            connect v.p -> u.g.x mode buffered; collective cc { u.k } }";
        let c = parse_configuration(src).unwrap();
        let again = parse_configuration(&pretty_print(&c)).unwrap();
        assert_eq!(c, again);
    }
}
