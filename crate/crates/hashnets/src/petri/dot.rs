use super::reach::ReachGraph;
use super::token::CompiledNet;
use super::{ArcDir, InterlacedNet};
use std::fmt::Write;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Places as circles (with their initial token count), transitions as boxes.
pub fn net_to_dot(net: &InterlacedNet) -> String {
    let mut s = String::from("digraph net {\n  rankdir=LR;\n");
    for p in net.places.keys() {
        let m = net.initial_of(p);
        let label = if m > 0 { format!("{p}\n{m}") } else { p.clone() };
        writeln!(s, "  {} [shape=circle,label={}];", quote(p), quote(&label)).unwrap();
    }
    for t in net.transitions.values() {
        let label = match &t.label {
            Some(l) => format!("{}\n{}", t.id, l),
            None => t.id.clone(),
        };
        writeln!(s, "  {} [shape=box,label={}];", quote(&t.id), quote(&label)).unwrap();
    }
    for (k, w) in &net.arcs {
        let (a, b) = match k.dir {
            ArcDir::In => (&k.place, &k.transition),
            ArcDir::Out => (&k.transition, &k.place),
        };
        if *w == 1 {
            writeln!(s, "  {} -> {};", quote(a), quote(b)).unwrap();
        } else {
            writeln!(s, "  {} -> {} [label=\"{w}\"];", quote(a), quote(b)).unwrap();
        }
    }
    s.push_str("}\n");
    s
}

/// States labelled by their nonzero places; edges by transition id and label.
pub fn reach_to_dot(net: &CompiledNet, g: &ReachGraph) -> String {
    let mut s = String::from("digraph reach {\n");
    for n in 0..g.len() {
        let m = g.marking(n);
        let body: Vec<String> =
            net.describe(&m).into_iter().map(|(p, c)| if c == 1 { p } else { format!("{p}={c}") }).collect();
        let style = if g.is_expanded(n) { "" } else { ",style=dashed" };
        writeln!(s, "  s{n} [label={}{style}];", quote(&format!("s{n}\n{}", body.join("\n")))).unwrap();
    }
    for (a, t, b) in g.edges() {
        let label = match &net.labels[t] {
            Some(l) => format!("{} ({l})", net.transitions[t]),
            None => net.transitions[t].clone(),
        };
        writeln!(s, "  s{a} -> s{b} [label={}];", quote(&label)).unwrap();
    }
    s.push_str("}\n");
    s
}
