use super::*;
use std::collections::HashMap;

/// A composite interlaced net: a tree of slices awaiting unfolding.
#[derive(Debug, Clone)]
pub enum NetExpr {
    Net(InterlacedNet),
    Compose(Vec<NetExpr>),
}

impl NetExpr {
    /// μ: unfold children, fold them with union, then quotient.
    pub fn unfold(&self) -> Result<InterlacedNet, NetError> {
        match self {
            NetExpr::Net(n) => n.unfold(),
            NetExpr::Compose(parts) => {
                let mut acc = InterlacedNet::new();
                for part in parts {
                    acc = acc.union(&part.unfold()?)?;
                }
                acc.unfold()
            }
        }
    }
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn join(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Representative id of each class: the lexicographically smallest member.
fn classes(ids: &[&String], dsu: &mut Dsu) -> Vec<String> {
    let mut best: HashMap<usize, &String> = HashMap::new();
    for (i, id) in ids.iter().enumerate() {
        let r = dsu.find(i);
        let slot = best.entry(r).or_insert(id);
        if *id < *slot {
            *slot = id;
        }
    }
    (0..ids.len()).map(|i| best[&dsu.find(i)].clone()).collect()
}

impl InterlacedNet {
    /// Quotients nodes of the same sort whose qualifier sets intersect
    /// (transitively). Parallel arcs coming from distinct original arcs are
    /// summed; initial markings of merged places are summed.
    pub fn unfold(&self) -> Result<InterlacedNet, NetError> {
        self.check()?;
        let pids: Vec<&String> = self.places.keys().collect();
        let tids: Vec<&String> = self.transitions.keys().collect();

        let mut place_of: HashMap<&Qualifier, usize> = HashMap::new();
        let mut trans_of: HashMap<&Qualifier, usize> = HashMap::new();
        let mut pd = Dsu::new(pids.len());
        let mut td = Dsu::new(tids.len());
        for (i, p) in self.places.values().enumerate() {
            for q in &p.qualifiers {
                if let Some(&j) = place_of.get(q) {
                    pd.join(i, j);
                } else {
                    place_of.insert(q, i);
                }
            }
        }
        for (i, t) in self.transitions.values().enumerate() {
            for q in &t.qualifiers {
                if let Some(&j) = place_of.get(q) {
                    return Err(NetError::SortClash {
                        place: pids[j].clone(),
                        transition: t.id.clone(),
                        qualifier: q.to_string(),
                    });
                }
                if let Some(&j) = trans_of.get(q) {
                    td.join(i, j);
                } else {
                    trans_of.insert(q, i);
                }
            }
        }

        let prep = classes(&pids, &mut pd);
        let trep = classes(&tids, &mut td);
        let pmap: HashMap<&str, &str> = pids.iter().zip(&prep).map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let tmap: HashMap<&str, &str> = tids.iter().zip(&trep).map(|(a, b)| (a.as_str(), b.as_str())).collect();

        let mut out = InterlacedNet::new();
        for (p, rep) in self.places.values().zip(&prep) {
            out.place(rep.clone(), p.qualifiers.iter().cloned());
        }
        let mut labels: HashMap<&str, BTreeSet<&str>> = HashMap::new();
        for (t, rep) in self.transitions.values().zip(&trep) {
            out.transition(rep.clone(), None, t.qualifiers.iter().cloned());
            let set = labels.entry(rep.as_str()).or_default();
            if let Some(l) = &t.label {
                set.insert(l.as_str());
            }
        }
        for (id, set) in labels {
            if !set.is_empty() {
                let joined = set.into_iter().collect::<Vec<_>>().join("|");
                out.transitions.get_mut(id).unwrap().label = Some(joined);
            }
        }
        for (k, w) in &self.arcs {
            let key = ArcKey {
                place: pmap[k.place.as_str()].to_string(),
                transition: tmap[k.transition.as_str()].to_string(),
                dir: k.dir,
            };
            *out.arcs.entry(key).or_insert(0) += w;
        }
        for (p, c) in &self.initial {
            if *c > 0 {
                *out.initial.entry(pmap[p.as_str()].to_string()).or_insert(0) += c;
            }
        }
        out.final_predicate = self.final_predicate.as_ref().map(|f| FinalPredicate {
            atoms: f
                .atoms
                .iter()
                .map(|a| FinalAtom {
                    place: pmap.get(a.place.as_str()).map_or(a.place.clone(), |p| p.to_string()),
                    ..a.clone()
                })
                .collect(),
        });
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::q;

    #[test]
    fn single_slice_is_fixed() {
        let mut n = InterlacedNet::new();
        n.place("p", [q!["a"]]);
        n.transition("t", None, [q!["b"]]);
        n.arc_in("p", "t", 1);
        n.mark("p", 1);
        assert_eq!(n.unfold().unwrap(), n);
    }

    #[test]
    fn shared_qualifier_merges_places() {
        let mut a = InterlacedNet::new();
        a.place("free_a", [q!["chan", "c", "free"]]);
        a.mark("free_a", 1);
        let mut b = InterlacedNet::new();
        b.place("free_b", [q!["chan", "c", "free"]]);
        let u = NetExpr::Compose(vec![NetExpr::Net(a), NetExpr::Net(b)]).unfold().unwrap();
        assert_eq!(u.places.len(), 1);
        assert_eq!(u.initial_of("free_a"), 1);
    }

    #[test]
    fn merge_is_transitive() {
        let mut n = InterlacedNet::new();
        n.place("x", [q!["1"]]);
        n.place("y", [q!["1"], q!["2"]]);
        n.place("z", [q!["2"]]);
        let u = n.unfold().unwrap();
        assert_eq!(u.places.len(), 1);
        assert_eq!(u.places[0].qualifiers.len(), 2);
    }

    #[test]
    fn sort_clash_is_reported() {
        let mut n = InterlacedNet::new();
        n.place("x", [q!["k"]]);
        n.transition("t", None, [q!["k"]]);
        assert!(matches!(n.unfold(), Err(NetError::SortClash { .. })));
    }

    #[test]
    fn parallel_arcs_from_distinct_preimages_add() {
        let mut n = InterlacedNet::new();
        n.place("p", []);
        n.transition("t1", Some("s!".into()), [q!["sync"]]);
        n.transition("t2", Some("r?".into()), [q!["sync"]]);
        n.arc_in("p", "t1", 1);
        n.arc_in("p", "t2", 2);
        let u = n.unfold().unwrap();
        assert_eq!(u.transitions.len(), 1);
        assert_eq!(u.weight("p", "t1", ArcDir::In), 3);
        assert_eq!(u.transitions["t1"].label.as_deref(), Some("r?|s!"));
    }

    #[test]
    fn unfold_is_idempotent_here() {
        let mut n = InterlacedNet::new();
        n.place("a", [q!["x"]]);
        n.place("b", [q!["x"]]);
        n.transition("t", None, []);
        n.arc_in("a", "t", 1);
        n.arc_out("t", "b", 1);
        let once = n.unfold().unwrap();
        assert_eq!(once.unfold().unwrap(), once);
    }
}
