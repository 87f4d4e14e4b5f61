//! Translation of a configuration into an interlaced Petri net.
//!
//! Every concern (a unit's protocol, its ports, each channel, each
//! collective group, the stream flags, the component skeleton) becomes its
//! own slice. Slices are composed and unfolded; nodes meet through shared
//! qualifiers. Each node carries a primary qualifier made of its own id, so a
//! node can be found again after unfolding with [`names::resolve`].

mod channel;
pub mod names;
mod stream;
mod unit;

pub use channel::{translate_channel, translate_collective};
pub use unit::{activations, translate_ports, translate_unit, Activation, SliceSet};

use crate::ahcl::{Channel, ChannelMode, Component, Direction, Port, Unit};
use crate::petri::{Atom, Cmp, FinalAtom, FinalPredicate, InterlacedNet, NetError, NetExpr, Qualifier};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TranslationOptions {
    pub with_stream_protocol: bool,
    /// Only meaningful together with the stream protocol.
    pub with_order_consistency: bool,
    /// Slots of a buffered channel that does not state its size.
    pub buffer_default: u32,
}

impl Default for TranslationOptions {
    fn default() -> Self {
        TranslationOptions { with_stream_protocol: true, with_order_consistency: false, buffer_default: 1 }
    }
}

impl TranslationOptions {
    pub fn without_streams() -> Self {
        TranslationOptions { with_stream_protocol: false, ..Default::default() }
    }

    pub fn with_order_consistency() -> Self {
        TranslationOptions { with_order_consistency: true, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TranslateError {
    #[error("unit `{unit}` has no port `{port}`")]
    UnboundPort { unit: String, port: String },
    #[error("unit `{unit}` has no semaphore `{sem}`")]
    UnboundSemaphore { unit: String, sem: String },
    #[error("`{port}` is not a stream port")]
    NotAStream { port: String },
    #[error("collective `{0}` mixes nesting factors")]
    ArityMismatch(String),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// A slice under construction. Every node added through it carries its own
/// id as primary qualifier.
#[derive(Debug, Clone, Default)]
pub(crate) struct Slice {
    pub net: InterlacedNet,
}

pub(crate) fn own(id: &str) -> Qualifier {
    Qualifier(vec![Atom::Str(id.to_string())])
}

impl Slice {
    pub fn place(&mut self, id: &str) -> String {
        self.net.place(id, [own(id)])
    }

    /// Identifies place `a` with place `b` at unfolding time.
    pub fn glue(&mut self, a: &str, b: &str) {
        self.place(b);
        self.net.place(a, [own(a), own(b)]);
    }

    pub fn trans(&mut self, id: &str, label: Option<String>) -> String {
        self.net.transition(id, label, [own(id)])
    }

    /// Makes `t` merge with the transition `other` of another slice.
    pub fn merge_with(&mut self, t: &str, other: &str) {
        self.net.transition(t, None, [own(other)]);
    }

    pub fn consume(&mut self, p: &str, t: &str, w: u32) {
        self.place(p);
        self.net.arc_in(p, t, w);
    }

    pub fn produce(&mut self, t: &str, p: &str, w: u32) {
        self.place(p);
        self.net.arc_out(t, p, w);
    }

    pub fn read(&mut self, p: &str, t: &str) {
        self.place(p);
        self.net.read_arc(p, t);
    }

    /// `t` moves a token from `from` to `to`.
    pub fn step(&mut self, t: &str, from: &str, to: &str) {
        self.consume(from, t, 1);
        self.produce(t, to, 1);
    }

    pub fn mark(&mut self, p: &str, n: u32) {
        self.place(p);
        if n > 0 {
            self.net.mark(p, n);
        }
    }
}

/// Translation context shared by the slice builders.
pub(crate) struct Ctx<'a> {
    pub c: &'a Component,
    pub opt: TranslationOptions,
}

impl<'a> Ctx<'a> {
    pub fn streams(&self, p: &Port) -> bool {
        self.opt.with_stream_protocol && p.stream
    }

    pub fn port(&self, u: &'a Unit, name: &str) -> Result<&'a Port, TranslateError> {
        u.port(name).ok_or_else(|| TranslateError::UnboundPort { unit: u.id.name.clone(), port: name.to_string() })
    }

    /// Collective group that contains `unit.port`, if any.
    pub fn collective_of(&self, unit: &str, port: &str) -> Option<&'a str> {
        self.c
            .collectives
            .iter()
            .find(|g| g.members.iter().any(|m| m.unit.name == unit && m.port.name == port))
            .map(|g| g.id.name.as_str())
    }

    /// Owner of the stream flags consulted when unit `u` tests `port`.
    pub fn entity(&self, u: &Unit, port: &Port) -> String {
        if port.direction == Direction::Collective {
            if let Some(g) = self.collective_of(&u.id.name, &port.id.name) {
                return g.to_string();
            }
        }
        format!("{}.{}", u.id, port.id)
    }

    pub fn channel_into(&self, path: &str) -> Option<(usize, &'a Channel)> {
        self.c.channels.iter().enumerate().find(|(_, ch)| ch.receiver.path() == path)
    }

    pub fn channels_from(&self, path: &str) -> impl Iterator<Item = &'a Channel> + '_ {
        let path = path.to_string();
        self.c.channels.iter().filter(move |ch| ch.sender.path() == path)
    }

    /// Flag owner of a channel's sending side.
    pub fn sender_entity(&self, ch: &Channel) -> String {
        format!("{}.{}", ch.sender.unit, ch.sender.port)
    }

    pub fn buffer_size(&self, ch: &Channel) -> u32 {
        match ch.mode {
            ChannelMode::Buffered(Some(b)) => b,
            _ => self.opt.buffer_default,
        }
    }
}

/// Υ^C: the whole component as a single flat net with final predicate
/// `program_end ≥ 1` and every semaphore back at zero.
pub fn translate_component(c: &Component, opt: &TranslationOptions) -> Result<InterlacedNet, TranslateError> {
    if opt.with_order_consistency && !opt.with_stream_protocol {
        return Err(TranslateError::InvalidOptions("order consistency needs the stream protocol".into()));
    }
    if opt.buffer_default == 0 {
        return Err(TranslateError::InvalidOptions("buffer_default must be positive".into()));
    }
    let ctx = Ctx { c, opt: *opt };
    let mut parts = Vec::new();
    for u in &c.units {
        parts.push(translate_unit(c, u, opt)?.expr());
    }
    for ch in &c.channels {
        parts.push(NetExpr::Net(channel::channel_slice(&ctx, ch)?.net));
    }
    for g in &c.collectives {
        parts.push(NetExpr::Net(channel::collective_slice(&ctx, g)?.net));
    }
    if opt.with_stream_protocol {
        parts.push(NetExpr::Net(stream::stream_slice(&ctx)?.net));
    }
    parts.push(NetExpr::Net(component_slice(c).net));
    let mut net = NetExpr::Compose(parts).unfold()?;
    channel::apply_ready(&ctx, &mut net)?;

    let mut atoms = vec![FinalAtom {
        place: names::resolve(&net, &names::program_end()).unwrap_or_default().to_string(),
        cmp: Cmp::Ge,
        count: 1,
    }];
    for u in &c.units {
        for s in &u.protocol.semaphores {
            if let Some(p) = names::resolve(&net, &names::sem_counter(&u.id.name, &s.name)) {
                atoms.push(FinalAtom { place: p.to_string(), cmp: Cmp::Eq, count: 0 });
            }
        }
    }
    net.final_predicate = Some(FinalPredicate { atoms });
    Ok(net)
}

/// Start/stop of every process, restart of repetitive ones and the
/// termination join.
fn component_slice(c: &Component) -> Slice {
    use names::*;
    let mut s = Slice::default();
    s.mark(&program_running(), 1);
    let prepare = s.trans(&program_end_prepare(), None);
    s.step(&prepare, &program_running(), &program_end_ready());
    let join = s.trans(&processes_all_join(), None);
    s.step(&join, &program_end_ready(), &program_end());
    for u in &c.units {
        let u = &u.id.name;
        s.mark(&process_started(u), 1);
        s.place(&process_finished(u));
        s.read(&process_finished(u), &join);
    }
    for u in &c.units {
        let name = &u.id.name;
        if u.repetitive {
            s.mark(&process_restart_enabled(name), 1);
            let t = s.trans(&process_restart(name), None);
            s.step(&t, &process_finished(name), &process_started(name));
            s.read(&process_restart_enabled(name), &t);
            let d = s.trans(&process_restart_disable(name), None);
            s.step(&d, &process_restart_enabled(name), &process_restart_disabled(name));
            s.read(&program_end_ready(), &d);
            s.read(&process_restart_disabled(name), &join);
        } else {
            s.read(&process_finished(name), &prepare);
        }
    }
    s
}

#[cfg(test)]
mod tests;
