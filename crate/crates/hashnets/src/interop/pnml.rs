//! PNML in the ISO place/transition grammar.
//!
//! Node ids of translated nets are not NCNames, so elements get positional
//! ids (`p0`, `t0`, `a0`). The original place id is the place name; the
//! original transition id and its label travel in a `toolspecific` block,
//! and the name holds the label (empty for λ) for other tools. The final
//! predicate is a net-level `toolspecific` block.

use super::InteropError;
use crate::petri::{ArcDir, Cmp, FinalAtom, FinalPredicate, InterlacedNet};
use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use std::collections::HashMap;
use std::fmt::Write;

pub const PTNET_TYPE: &str = "http://www.pnml.org/version-2009/grammar/ptnet";
const PNML_NS: &str = "http://www.pnml.org/version-2009/grammar/pnml";
const TOOL: &str = "hashnets";
const TOOL_VERSION: &str = "1";

fn text_element(out: &mut String, indent: usize, tag: &str, text: &str) {
    let pad = " ".repeat(indent);
    let _ = writeln!(out, "{pad}<{tag}><text>{}</text></{tag}>", escape(text));
}

/// Serializes an unfolded net. Output depends only on the net.
pub fn export_pnml(net: &InterlacedNet) -> Result<String, InteropError> {
    let pid: HashMap<&str, String> =
        net.places.keys().enumerate().map(|(i, p)| (p.as_str(), format!("p{i}"))).collect();
    let tid: HashMap<&str, String> =
        net.transitions.keys().enumerate().map(|(i, t)| (t.as_str(), format!("t{i}"))).collect();
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<pnml xmlns=\"{PNML_NS}\">");
    let _ = writeln!(out, "  <net id=\"net\" type=\"{PTNET_TYPE}\">");
    if let Some(f) = &net.final_predicate {
        let _ = writeln!(out, "    <toolspecific tool=\"{TOOL}\" version=\"{TOOL_VERSION}\">");
        out.push_str("      <final>\n");
        for a in &f.atoms {
            let p = pid.get(a.place.as_str()).ok_or_else(|| InteropError::InvalidId(a.place.clone()))?;
            let cmp = match a.cmp {
                Cmp::Eq => "eq",
                Cmp::Ge => "ge",
            };
            let _ = writeln!(out, "        <atom place=\"{p}\" cmp=\"{cmp}\" count=\"{}\"/>", a.count);
        }
        out.push_str("      </final>\n    </toolspecific>\n");
    }
    out.push_str("    <page id=\"page0\">\n");
    for p in net.places.keys() {
        let _ = writeln!(out, "      <place id=\"{}\">", pid[p.as_str()]);
        text_element(&mut out, 8, "name", p);
        let m = net.initial.get(p).copied().unwrap_or(0);
        if m > 0 {
            text_element(&mut out, 8, "initialMarking", &m.to_string());
        }
        out.push_str("      </place>\n");
    }
    for (id, t) in &net.transitions {
        let _ = writeln!(out, "      <transition id=\"{}\">", tid[id.as_str()]);
        text_element(&mut out, 8, "name", t.label.as_deref().unwrap_or(""));
        let _ = writeln!(out, "        <toolspecific tool=\"{TOOL}\" version=\"{TOOL_VERSION}\">");
        let _ = writeln!(out, "          <id>{}</id>", escape(id.as_str()));
        if let Some(l) = &t.label {
            let _ = writeln!(out, "          <label>{}</label>", escape(l.as_str()));
        }
        out.push_str("        </toolspecific>\n      </transition>\n");
    }
    for (k, (a, w)) in net.arcs.iter().enumerate() {
        let (p, t) = (
            pid.get(a.place.as_str()).ok_or_else(|| InteropError::InvalidId(a.place.clone()))?,
            tid.get(a.transition.as_str()).ok_or_else(|| InteropError::InvalidId(a.transition.clone()))?,
        );
        let (src, dst) = match a.dir {
            ArcDir::In => (p, t),
            ArcDir::Out => (t, p),
        };
        let _ = writeln!(out, "      <arc id=\"a{k}\" source=\"{src}\" target=\"{dst}\">");
        text_element(&mut out, 8, "inscription", &w.to_string());
        out.push_str("      </arc>\n");
    }
    out.push_str("    </page>\n  </net>\n</pnml>\n");
    Ok(out)
}

#[derive(Default)]
struct Node {
    xml_id: String,
    name: Option<String>,
    marking: u32,
    tool_id: Option<String>,
    label: Option<String>,
}

struct ArcRec {
    source: String,
    target: String,
    weight: u32,
}

fn attr(e: &BytesStart, key: &str) -> Result<Option<String>, InteropError> {
    let a = e.try_get_attribute(key).map_err(|e| InteropError::Xml(e.to_string()))?;
    a.map(|a| a.unescape_value().map(|v| v.into_owned()).map_err(|e| InteropError::Xml(e.to_string()))).transpose()
}

fn number(s: &str, what: &str) -> Result<u32, InteropError> {
    s.trim().parse().map_err(|_| InteropError::Invalid(format!("bad {what} `{s}`")))
}

/// Reads a P/T net. Nodes written by [`export_pnml`] get their original ids
/// and labels back; other documents use element ids, and transition names
/// as labels (an empty name is λ). Qualifier sets are empty.
pub fn import_pnml(text: &str) -> Result<InterlacedNet, InteropError> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);
    let mut stack: Vec<String> = Vec::new();
    let mut places: Vec<Node> = Vec::new();
    let mut transitions: Vec<Node> = Vec::new();
    let mut arcs: Vec<ArcRec> = Vec::new();
    let mut finals: Vec<(String, Cmp, u32)> = Vec::new();
    let mut saw_net = false;
    loop {
        let ev = reader.read_event().map_err(|e| InteropError::Xml(e.to_string()))?;
        let (e, empty) = match &ev {
            Event::Start(e) => (Some(e), false),
            Event::Empty(e) => (Some(e), true),
            _ => (None, false),
        };
        if let Some(e) = e {
            let tag = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
            match tag.as_str() {
                "net" => {
                    let ty = attr(e, "type")?.unwrap_or_default();
                    if ty != PTNET_TYPE {
                        return Err(InteropError::UnsupportedNetType(ty));
                    }
                    saw_net = true;
                }
                "place" | "transition" => {
                    let id = attr(e, "id")?.ok_or_else(|| InteropError::Invalid(format!("{tag} without id")))?;
                    let node = Node { xml_id: id, ..Default::default() };
                    if tag == "place" {
                        places.push(node);
                    } else {
                        transitions.push(node);
                    }
                }
                "arc" => {
                    let get = |k| attr(e, k)?.ok_or_else(|| InteropError::Invalid(format!("arc without {k}")));
                    arcs.push(ArcRec { source: get("source")?, target: get("target")?, weight: 1 });
                }
                "atom" if stack.iter().any(|s| s == "final") => {
                    let place = attr(e, "place")?.unwrap_or_default();
                    let cmp = match attr(e, "cmp")?.as_deref() {
                        Some("eq") => Cmp::Eq,
                        _ => Cmp::Ge,
                    };
                    let count = number(&attr(e, "count")?.unwrap_or_else(|| "1".into()), "count")?;
                    finals.push((place, cmp, count));
                }
                _ => {}
            }
            if !empty {
                stack.push(tag);
            }
            continue;
        }
        match ev {
            Event::End(_) => {
                stack.pop();
            }
            Event::Text(t) => {
                let v = t.unescape().map_err(|e| InteropError::Xml(e.to_string()))?.into_owned();
                set_text(&stack, v, &mut places, &mut transitions, &mut arcs)?;
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !saw_net {
        return Err(InteropError::Invalid("no <net> element".into()));
    }
    build(places, transitions, arcs, finals)
}

fn set_text(
    stack: &[String],
    v: String,
    places: &mut [Node],
    transitions: &mut [Node],
    arcs: &mut [ArcRec],
) -> Result<(), InteropError> {
    let tail: Vec<&str> = stack.iter().rev().take(4).map(String::as_str).collect();
    match tail.as_slice() {
        ["text", "name", "place", ..] => places.last_mut().unwrap().name = Some(v),
        ["text", "initialMarking", "place", ..] => places.last_mut().unwrap().marking = number(&v, "marking")?,
        ["text", "name", "transition", ..] => transitions.last_mut().unwrap().name = Some(v),
        ["id", "toolspecific", "transition", ..] => transitions.last_mut().unwrap().tool_id = Some(v),
        ["label", "toolspecific", "transition", ..] => transitions.last_mut().unwrap().label = Some(v),
        ["text", "inscription", "arc", ..] => arcs.last_mut().unwrap().weight = number(&v, "weight")?,
        _ => {}
    }
    Ok(())
}

fn build(
    places: Vec<Node>,
    transitions: Vec<Node>,
    arcs: Vec<ArcRec>,
    finals: Vec<(String, Cmp, u32)>,
) -> Result<InterlacedNet, InteropError> {
    let mut net = InterlacedNet::new();
    let mut pmap: HashMap<String, String> = HashMap::new();
    let mut tmap: HashMap<String, String> = HashMap::new();
    let names: Vec<&str> = places.iter().filter_map(|p| p.name.as_deref()).collect();
    let unique = |n: &str| names.iter().filter(|x| **x == n).count() == 1;
    for p in &places {
        let id = match p.name.as_deref() {
            Some(n) if !n.is_empty() && unique(n) => n.to_string(),
            _ => p.xml_id.clone(),
        };
        net.place(&id, []);
        if p.marking > 0 {
            net.mark(&id, p.marking);
        }
        pmap.insert(p.xml_id.clone(), id);
    }
    for t in &transitions {
        let id = t.tool_id.clone().unwrap_or_else(|| t.xml_id.clone());
        let label = match (&t.tool_id, &t.label, &t.name) {
            (Some(_), l, _) => l.clone(),
            (None, _, Some(n)) if !n.is_empty() => Some(n.clone()),
            _ => None,
        };
        net.transition(&id, label, []);
        tmap.insert(t.xml_id.clone(), id);
    }
    for a in arcs {
        if a.weight == 0 {
            return Err(InteropError::Invalid("arc weight 0".into()));
        }
        match (pmap.get(&a.source), tmap.get(&a.target), tmap.get(&a.source), pmap.get(&a.target)) {
            (Some(p), Some(t), _, _) => net.arc_in(p, t, a.weight),
            (_, _, Some(t), Some(p)) => net.arc_out(t, p, a.weight),
            _ => {
                return Err(InteropError::Invalid(format!(
                    "arc {} -> {} does not join a place and a transition",
                    a.source, a.target
                )))
            }
        }
    }
    if !finals.is_empty() {
        let atoms = finals
            .into_iter()
            .map(|(p, cmp, count)| {
                let place = pmap
                    .get(&p)
                    .cloned()
                    .ok_or_else(|| InteropError::Invalid(format!("final atom on unknown place {p}")))?;
                Ok(FinalAtom { place, cmp, count })
            })
            .collect::<Result<Vec<_>, InteropError>>()?;
        net.final_predicate = Some(FinalPredicate { atoms });
    }
    net.check().map_err(|e| InteropError::Invalid(e.to_string()))?;
    Ok(net)
}
