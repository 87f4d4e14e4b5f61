//! Deadlock-preserving stubborn sets.
//!
//! At a marking M a set S of transitions is stubborn when
//! - every enabled t in S drags in every transition sharing an input place
//!   with t (so nothing outside S can disable t or be disabled by it), and
//! - every disabled t in S has an input place p with M(p) below its weight
//!   such that every transition that can raise M(p) is in S.
//!
//! Firing only the enabled members of a stubborn set that contains an
//! enabled transition keeps every reachable dead marking reachable.

use super::token::{CompiledNet, Marking};

pub(crate) struct Stubborn {
    /// Transitions consuming from each place (read pairs included).
    consumers: Vec<Vec<u32>>,
    /// Transitions whose firing raises each place.
    raisers: Vec<Vec<u32>>,
}

impl Stubborn {
    pub fn new(net: &CompiledNet) -> Self {
        let np = net.places.len();
        let mut consumers = vec![Vec::new(); np];
        let mut raisers = vec![Vec::new(); np];
        for t in 0..net.transitions.len() {
            for &(p, _) in &net.pre[t] {
                consumers[p].push(t as u32);
            }
            for &(p, w) in &net.post[t] {
                let taken = net.pre[t].iter().find(|x| x.0 == p).map_or(0, |x| x.1);
                if w > taken {
                    raisers[p].push(t as u32);
                }
            }
        }
        Stubborn { consumers, raisers }
    }

    /// Enabled members of the smallest stubborn set found, trying every
    /// enabled transition as seed. Returns `enabled` itself when no seed
    /// gives a proper subset.
    pub fn reduce(&self, net: &CompiledNet, m: &Marking, enabled: &[usize]) -> Vec<usize> {
        if enabled.len() <= 1 {
            return enabled.to_vec();
        }
        let nt = net.transitions.len();
        let mut is_enabled = vec![false; nt];
        for &t in enabled {
            is_enabled[t] = true;
        }
        let mut best: Option<Vec<usize>> = None;
        let mut member = vec![u32::MAX; nt];
        for (round, &seed) in enabled.iter().enumerate() {
            let stamp = round as u32;
            let bound = best.as_ref().map_or(enabled.len(), Vec::len);
            let mut picked = Vec::new();
            let mut stack = vec![seed];
            member[seed] = stamp;
            let mut aborted = false;
            while let Some(t) = stack.pop() {
                if is_enabled[t] {
                    picked.push(t);
                    if picked.len() >= bound {
                        aborted = true;
                        break;
                    }
                    for &(p, _) in &net.pre[t] {
                        for &u in &self.consumers[p] {
                            if member[u as usize] != stamp {
                                member[u as usize] = stamp;
                                stack.push(u as usize);
                            }
                        }
                    }
                } else {
                    // scapegoat: the short input place with fewest raisers
                    let p = net.pre[t]
                        .iter()
                        .filter(|&&(p, w)| m.get(p) < w)
                        .map(|&(p, _)| p)
                        .min_by_key(|&p| self.raisers[p].len())
                        .expect("disabled transition has a short input place");
                    for &u in &self.raisers[p] {
                        if member[u as usize] != stamp {
                            member[u as usize] = stamp;
                            stack.push(u as usize);
                        }
                    }
                }
            }
            if !aborted {
                picked.sort_unstable();
                let single = picked.len() == 1;
                best = Some(picked);
                if single {
                    break;
                }
            }
        }
        best.unwrap_or_else(|| enabled.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petri::InterlacedNet;

    #[test]
    fn independent_transitions_reduce_to_one() {
        let mut n = InterlacedNet::new();
        for i in 0..3 {
            let (p, q, t) = (format!("p{i}"), format!("q{i}"), format!("t{i}"));
            n.place(&p, []);
            n.place(&q, []);
            n.transition(&t, None, []);
            n.arc_in(&p, &t, 1);
            n.arc_out(&t, &q, 1);
            n.mark(&p, 1);
        }
        let c = n.compile().unwrap();
        let s = Stubborn::new(&c);
        let en: Vec<usize> = c.enabled_transitions(&c.initial).collect();
        assert_eq!(s.reduce(&c, &c.initial, &en).len(), 1);
    }

    #[test]
    fn conflicts_stay_together() {
        let mut n = InterlacedNet::new();
        n.place("p", []);
        for t in ["a", "b"] {
            n.transition(t, None, []);
            n.arc_in("p", t, 1);
        }
        n.mark("p", 1);
        let c = n.compile().unwrap();
        let en: Vec<usize> = c.enabled_transitions(&c.initial).collect();
        assert_eq!(Stubborn::new(&c).reduce(&c, &c.initial, &en), vec![0, 1]);
    }
}
