use super::*;
use rustc_hash::FxHashMap;

/// Dense marking indexed by the compiled place order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Marking(pub Vec<u32>);

impl Marking {
    pub fn get(&self, p: usize) -> u32 {
        self.0[p]
    }

    /// Zero-run-length varint encoding. Canonical, so byte equality is
    /// marking equality.
    pub fn encode(&self) -> Box<[u8]> {
        let mut out = Vec::with_capacity(16);
        let mut zeros = 0u64;
        for &v in &self.0 {
            if v == 0 {
                zeros += 1;
                continue;
            }
            if zeros > 0 {
                out.push(0);
                push_varint(&mut out, zeros);
                zeros = 0;
            }
            push_varint(&mut out, v as u64);
        }
        out.into_boxed_slice()
    }

    pub fn decode(bytes: &[u8], len: usize) -> Marking {
        let mut v = Vec::with_capacity(len);
        let mut i = 0;
        while i < bytes.len() {
            if bytes[i] == 0 {
                i += 1;
                let (run, n) = read_varint(&bytes[i..]);
                i += n;
                v.extend(std::iter::repeat(0).take(run as usize));
            } else {
                let (x, n) = read_varint(&bytes[i..]);
                i += n;
                v.push(x as u32);
            }
        }
        v.resize(len, 0);
        Marking(v)
    }
}

fn push_varint(out: &mut Vec<u8>, mut x: u64) {
    // first byte of a nonzero value is never 0 because the low 7 bits or the
    // continuation bit are set
    loop {
        let b = (x & 0x7f) as u8;
        x >>= 7;
        if x == 0 {
            out.push(b);
            return;
        }
        out.push(b | 0x80);
    }
}

fn read_varint(bytes: &[u8]) -> (u64, usize) {
    let mut x = 0u64;
    let mut shift = 0;
    for (i, &b) in bytes.iter().enumerate() {
        x |= ((b & 0x7f) as u64) << shift;
        if b & 0x80 == 0 {
            return (x, i + 1);
        }
        shift += 7;
    }
    (x, bytes.len())
}

/// Index-based view of a net used by the token game and the explorers.
#[derive(Debug, Clone)]
pub struct CompiledNet {
    pub places: Vec<String>,
    pub transitions: Vec<String>,
    pub labels: Vec<Option<String>>,
    pub pre: Vec<Vec<(usize, u32)>>,
    pub post: Vec<Vec<(usize, u32)>>,
    pub initial: Marking,
    pub final_predicate: Option<Vec<(usize, Cmp, u32)>>,
    place_index: FxHashMap<String, usize>,
    trans_index: FxHashMap<String, usize>,
}

impl CompiledNet {
    pub fn new(net: &InterlacedNet) -> Result<Self, NetError> {
        net.check()?;
        let places: Vec<String> = net.places.keys().cloned().collect();
        let transitions: Vec<String> = net.transitions.keys().cloned().collect();
        let place_index: FxHashMap<String, usize> = places.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        let trans_index: FxHashMap<String, usize> =
            transitions.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let mut pre = vec![Vec::new(); transitions.len()];
        let mut post = vec![Vec::new(); transitions.len()];
        for (k, w) in &net.arcs {
            let p = place_index[&k.place];
            let t = trans_index[&k.transition];
            match k.dir {
                ArcDir::In => pre[t].push((p, *w)),
                ArcDir::Out => post[t].push((p, *w)),
            }
        }
        for v in pre.iter_mut().chain(post.iter_mut()) {
            v.sort_unstable();
        }
        let mut m0 = vec![0; places.len()];
        for (p, c) in &net.initial {
            m0[place_index[p]] += c;
        }
        let final_predicate = match &net.final_predicate {
            None => None,
            Some(f) => Some(
                f.atoms
                    .iter()
                    .map(|a| {
                        place_index
                            .get(&a.place)
                            .map(|&i| (i, a.cmp, a.count))
                            .ok_or_else(|| NetError::UnknownPlace(a.place.clone()))
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        };
        Ok(CompiledNet {
            labels: net.transitions.values().map(|t| t.label.clone()).collect(),
            places,
            transitions,
            pre,
            post,
            initial: Marking(m0),
            final_predicate,
            place_index,
            trans_index,
        })
    }

    pub fn place_index(&self, id: &str) -> Option<usize> {
        self.place_index.get(id).copied()
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.trans_index.get(id).copied()
    }

    pub fn is_enabled(&self, m: &Marking, t: usize) -> bool {
        self.pre[t].iter().all(|&(p, w)| m.0[p] >= w)
    }

    /// Fires `t` assuming it is enabled.
    pub fn fire_unchecked(&self, m: &Marking, t: usize) -> Marking {
        let mut next = m.0.clone();
        for &(p, w) in &self.pre[t] {
            next[p] -= w;
        }
        for &(p, w) in &self.post[t] {
            next[p] += w;
        }
        Marking(next)
    }

    pub fn enabled(&self, m: &Marking, t: &str) -> Result<bool, NetError> {
        let i = self.transition_index(t).ok_or_else(|| NetError::UnknownTransition(t.to_string()))?;
        Ok(self.is_enabled(m, i))
    }

    pub fn fire(&self, m: &Marking, t: &str) -> Result<Marking, NetError> {
        let i = self.transition_index(t).ok_or_else(|| NetError::UnknownTransition(t.to_string()))?;
        if !self.is_enabled(m, i) {
            return Err(NetError::NotEnabled(t.to_string()));
        }
        Ok(self.fire_unchecked(m, i))
    }

    pub fn enabled_transitions<'a>(&'a self, m: &'a Marking) -> impl Iterator<Item = usize> + 'a {
        (0..self.transitions.len()).filter(move |&t| self.is_enabled(m, t))
    }

    pub fn is_final(&self, m: &Marking) -> Result<bool, NetError> {
        let f = self.final_predicate.as_ref().ok_or(NetError::NoFinalMarking)?;
        Ok(f.iter().all(|&(p, cmp, k)| match cmp {
            Cmp::Eq => m.0[p] == k,
            Cmp::Ge => m.0[p] >= k,
        }))
    }

    pub fn marking_from(&self, pairs: &[(&str, u32)]) -> Result<Marking, NetError> {
        let mut m = vec![0; self.places.len()];
        for (p, c) in pairs {
            let i = self.place_index(p).ok_or_else(|| NetError::UnknownPlace(p.to_string()))?;
            m[i] = *c;
        }
        Ok(Marking(m))
    }

    /// Nonzero entries by place id, in place order.
    pub fn describe(&self, m: &Marking) -> Vec<(String, u32)> {
        m.0.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| (self.places[i].clone(), c)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> InterlacedNet {
        let mut n = InterlacedNet::new();
        n.place("p", []);
        n.place("q", []);
        n.transition("t", Some("a".into()), []);
        n.arc_in("p", "t", 2);
        n.arc_out("t", "q", 3);
        n
    }

    #[test]
    fn enabledness_by_weight() {
        let c = chain().compile().unwrap();
        assert!(!c.enabled(&c.marking_from(&[("p", 1)]).unwrap(), "t").unwrap());
        assert!(c.enabled(&c.marking_from(&[("p", 2)]).unwrap(), "t").unwrap());
        assert!(matches!(c.enabled(&c.initial, "nope"), Err(NetError::UnknownTransition(_))));
    }

    #[test]
    fn weighted_firing() {
        let c = chain().compile().unwrap();
        let m = c.fire(&c.marking_from(&[("p", 5)]).unwrap(), "t").unwrap();
        assert_eq!(m.0, vec![3, 3]);
        assert!(matches!(c.fire(&c.initial, "t"), Err(NetError::NotEnabled(_))));
    }

    #[test]
    fn self_loop_conserves() {
        let mut n = InterlacedNet::new();
        n.place("p", []);
        n.transition("t", None, []);
        n.read_arc("p", "t");
        n.mark("p", 1);
        let c = n.compile().unwrap();
        assert_eq!(c.fire(&c.initial, "t").unwrap(), c.initial);
    }

    #[test]
    fn codec_round_trip() {
        for v in [vec![], vec![0, 0, 0], vec![1, 0, 300, 0, 0, 7], vec![u32::MAX, 0]] {
            let m = Marking(v.clone());
            assert_eq!(Marking::decode(&m.encode(), v.len()), m);
        }
    }
}
