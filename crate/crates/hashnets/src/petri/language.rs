use super::reach::ReachGraph;
use super::token::CompiledNet;
use super::NetError;
use rustc_hash::FxHashSet;
use std::collections::BTreeSet;

/// A word of transition labels, λ erased.
pub type Word = Vec<String>;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Language {
    pub words: BTreeSet<Word>,
    /// The underlying graph was cut off or reduced, so the set may be incomplete.
    pub truncated: bool,
}

struct Walk {
    alphabet: Vec<String>,
    pairs: Vec<(usize, Vec<u32>)>,
}

impl Walk {
    fn spell(&self, w: &[u32]) -> Word {
        w.iter().map(|&a| self.alphabet[a as usize].clone()).collect()
    }
}

/// Every (node, word) pair reachable from the root with `|word| <= maxlen`.
fn walk(net: &CompiledNet, g: &ReachGraph, maxlen: usize) -> Walk {
    let mut alphabet: Vec<String> = net.labels.iter().flatten().cloned().collect();
    alphabet.sort_unstable();
    alphabet.dedup();
    let letter: Vec<Option<u32>> =
        net.labels.iter().map(|l| l.as_ref().map(|s| alphabet.binary_search(s).unwrap() as u32)).collect();

    let mut seen: FxHashSet<(usize, Vec<u32>)> = FxHashSet::default();
    let mut stack = vec![(0usize, Vec::new())];
    seen.insert((0, Vec::new()));
    let mut pairs = Vec::new();
    while let Some((n, w)) = stack.pop() {
        for &(t, d) in g.successors(n) {
            let next = match letter[t as usize] {
                None => w.clone(),
                Some(_) if w.len() >= maxlen => continue,
                Some(a) => {
                    let mut v = w.clone();
                    v.push(a);
                    v
                }
            };
            let key = (d as usize, next);
            if seen.insert(key.clone()) {
                stack.push(key);
            }
        }
        pairs.push((n, w));
    }
    Walk { alphabet, pairs }
}

/// Words spelled by firing sequences from M0 to a final marking.
pub fn terminal_language(net: &CompiledNet, g: &ReachGraph, maxlen: usize) -> Result<Language, NetError> {
    if net.final_predicate.is_none() {
        return Err(NetError::NoFinalMarking);
    }
    let walk = walk(net, g, maxlen);
    let mut words = BTreeSet::new();
    for (n, w) in &walk.pairs {
        if net.is_final(&g.marking(*n))? {
            words.insert(walk.spell(w));
        }
    }
    Ok(Language { words, truncated: !g.is_complete() })
}

/// Prefix-closed language of all firing sequences from M0.
pub fn net_language(net: &CompiledNet, g: &ReachGraph, maxlen: usize) -> Language {
    let walk = walk(net, g, maxlen);
    let words = walk.pairs.iter().map(|(_, w)| walk.spell(w)).collect();
    Language { words, truncated: !g.is_complete() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petri::{reachability_graph, FinalPredicate, InterlacedNet, Limits};

    fn seq_ab() -> CompiledNet {
        let mut n = InterlacedNet::new();
        for p in ["p0", "p1", "p2"] {
            n.place(p, []);
        }
        n.transition("ta", Some("a!".into()), []);
        n.transition("tb", Some("b?".into()), []);
        n.arc_in("p0", "ta", 1);
        n.arc_out("ta", "p1", 1);
        n.arc_in("p1", "tb", 1);
        n.arc_out("tb", "p2", 1);
        n.mark("p0", 1);
        n.final_predicate = Some(FinalPredicate::at_least("p2", 1));
        n.compile().unwrap()
    }

    #[test]
    fn seq_languages() {
        let c = seq_ab();
        let g = reachability_graph(&c, Limits::default());
        let t = terminal_language(&c, &g, 8).unwrap();
        assert_eq!(t.words.into_iter().collect::<Vec<_>>(), vec![vec!["a!".to_string(), "b?".to_string()]]);
        let l = net_language(&c, &g, 8);
        assert_eq!(l.words.len(), 3);
        let short = net_language(&c, &g, 1);
        assert_eq!(short.words.len(), 2);
    }

    #[test]
    fn missing_final_predicate() {
        let mut n = InterlacedNet::new();
        n.place("p", []);
        let c = n.compile().unwrap();
        let g = reachability_graph(&c, Limits::default());
        assert_eq!(terminal_language(&c, &g, 3), Err(NetError::NoFinalMarking));
    }
}
