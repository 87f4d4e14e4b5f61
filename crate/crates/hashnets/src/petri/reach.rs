use super::stubborn::Stubborn;
use super::token::{CompiledNet, Marking};
use indexmap::IndexSet;
use rayon::prelude::*;
use rustc_hash::FxBuildHasher;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_depth: usize,
}

impl Limits {
    pub fn states(max_states: usize) -> Self {
        Limits { max_states, max_depth: usize::MAX }
    }
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: 1_000_000, max_depth: usize::MAX }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReachStats {
    pub states: usize,
    pub edges: usize,
    pub peak_frontier: usize,
    pub depth: usize,
}

/// Explored state graph. Node 0 is the initial marking; nodes are numbered in
/// BFS discovery order and edges are grouped by source.
#[derive(Debug, Clone)]
pub struct ReachGraph {
    pub num_places: usize,
    states: IndexSet<Box<[u8]>, FxBuildHasher>,
    /// (transition, target) pairs; the out-edges of node `n` are
    /// `succ[offsets[n]..offsets[n + 1]]`.
    succ: Vec<(u32, u32)>,
    offsets: Vec<usize>,
    expanded: Vec<bool>,
    parent: Vec<Option<(u32, u32)>>,
    depth: Vec<u32>,
    pub truncated: bool,
    /// Built with stubborn-set reduction: dead markings are all there, but
    /// nodes may miss successors (those nodes are not expanded).
    pub reduced: bool,
    pub stats: ReachStats,
}

impl PartialEq for ReachGraph {
    fn eq(&self, other: &Self) -> bool {
        self.num_places == other.num_places
            && self.states.iter().eq(other.states.iter())
            && self.succ == other.succ
            && self.offsets == other.offsets
            && self.expanded == other.expanded
            && self.parent == other.parent
            && self.truncated == other.truncated
            && self.reduced == other.reduced
            && self.stats == other.stats
    }
}

impl ReachGraph {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn marking(&self, n: usize) -> Marking {
        Marking::decode(&self.states[n], self.num_places)
    }

    pub fn index_of(&self, m: &Marking) -> Option<usize> {
        self.states.get_index_of(&m.encode())
    }

    pub fn successors(&self, n: usize) -> &[(u32, u32)] {
        if n + 1 < self.offsets.len() {
            &self.succ[self.offsets[n]..self.offsets[n + 1]]
        } else {
            &[]
        }
    }

    /// False for nodes left on the frontier when a limit was hit, for nodes
    /// that lost some successor to the state cap, and for nodes where the
    /// reduction skipped an enabled transition.
    pub fn is_expanded(&self, n: usize) -> bool {
        self.expanded[n]
    }

    pub fn depth_of(&self, n: usize) -> usize {
        self.depth[n] as usize
    }

    /// Every successor of every reachable marking is present.
    pub fn is_complete(&self) -> bool {
        !self.truncated && !self.reduced
    }

    /// Transitions of a shortest firing sequence from the root to `n`.
    pub fn path_to(&self, mut n: usize) -> Vec<usize> {
        let mut path = Vec::new();
        while let Some((p, t)) = self.parent[n] {
            path.push(t as usize);
            n = p as usize;
        }
        path.reverse();
        path
    }

    /// All edges as (source, transition, target), in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.len()).flat_map(move |n| self.successors(n).iter().map(move |&(t, d)| (n, t as usize, d as usize)))
    }

    /// Reverse adjacency: for each node, its (source, transition) pairs.
    pub fn predecessors(&self) -> Vec<Vec<(u32, u32)>> {
        let mut pred = vec![Vec::new(); self.len()];
        for (s, t, d) in self.edges() {
            pred[d].push((s as u32, t as u32));
        }
        pred
    }
}

const CHUNK: usize = 4096;

/// Breadth-first exploration using worker threads for successor
/// generation. The resulting graph is identical to the sequential one.
pub fn reachability_graph(net: &CompiledNet, limits: Limits) -> ReachGraph {
    explore(net, limits, true, None)
}

pub fn reachability_graph_seq(net: &CompiledNet, limits: Limits) -> ReachGraph {
    explore(net, limits, false, None)
}

/// Exploration firing only a stubborn subset of the enabled transitions.
/// Preserves every reachable dead marking; paths in the result are real
/// firing sequences of the net.
pub fn reduced_reachability_graph(net: &CompiledNet, limits: Limits) -> ReachGraph {
    let s = Stubborn::new(net);
    explore(net, limits, true, Some(&s))
}

/// Successors of a state and whether all enabled transitions were fired.
fn successors_of(net: &CompiledNet, bytes: &[u8], stubborn: Option<&Stubborn>) -> (Vec<(u32, Box<[u8]>)>, bool) {
    let m = Marking::decode(bytes, net.places.len());
    let enabled: Vec<usize> = net.enabled_transitions(&m).collect();
    let fired = match stubborn {
        Some(s) => s.reduce(net, &m, &enabled),
        None => enabled.clone(),
    };
    let all = fired.len() == enabled.len();
    (fired.into_iter().map(|t| (t as u32, net.fire_unchecked(&m, t).encode())).collect(), all)
}

fn explore(net: &CompiledNet, limits: Limits, parallel: bool, stubborn: Option<&Stubborn>) -> ReachGraph {
    let mut g = ReachGraph {
        num_places: net.places.len(),
        states: IndexSet::with_hasher(FxBuildHasher),
        succ: Vec::new(),
        offsets: vec![0],
        expanded: vec![false],
        parent: vec![None],
        depth: vec![0],
        truncated: false,
        reduced: false,
        stats: ReachStats::default(),
    };
    g.states.insert(net.initial.encode());
    let max_states = limits.max_states.max(1);

    let (mut lo, mut hi) = (0usize, 1usize);
    let mut level = 0usize;
    while lo < hi {
        g.stats.peak_frontier = g.stats.peak_frontier.max(hi - lo);
        g.stats.depth = level;
        if level >= limits.max_depth {
            // frontier stays unexpanded; flag only if something could fire
            if (lo..hi).any(|n| !successors_of(net, &g.states[n], None).0.is_empty()) {
                g.truncated = true;
            }
            break;
        }
        let mut start = lo;
        while start < hi {
            let end = (start + CHUNK).min(hi);
            let batch: Vec<(Vec<(u32, Box<[u8]>)>, bool)> = if parallel {
                (start..end).into_par_iter().map(|n| successors_of(net, &g.states[n], stubborn)).collect()
            } else {
                (start..end).map(|n| successors_of(net, &g.states[n], stubborn)).collect()
            };
            for (n, (succs, all)) in (start..end).zip(batch) {
                let mut complete = all;
                g.reduced |= !all;
                for (t, bytes) in succs {
                    let target = match g.states.get_index_of(&bytes) {
                        Some(i) => i,
                        None if g.states.len() < max_states => {
                            let (i, _) = g.states.insert_full(bytes);
                            g.parent.push(Some((n as u32, t)));
                            g.depth.push(level as u32 + 1);
                            g.expanded.push(false);
                            i
                        }
                        None => {
                            g.truncated = true;
                            complete = false;
                            continue;
                        }
                    };
                    g.succ.push((t, target as u32));
                }
                g.expanded[n] = complete;
                g.offsets.push(g.succ.len());
            }
            start = end;
        }
        lo = hi;
        hi = g.states.len();
        level += 1;
    }
    // unexpanded nodes get empty edge ranges
    while g.offsets.len() < g.states.len() + 1 {
        g.offsets.push(g.succ.len());
    }
    g.stats.states = g.states.len();
    g.stats.edges = g.succ.len();
    g
}
