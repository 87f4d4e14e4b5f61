//! Υ^L (channels), collective groups and the ready-mode rewrite.

use super::names::*;
use super::stream::{delivered, kind_clear, kind_pending, received};
use super::{Ctx, Slice, TranslateError, TranslationOptions};
use crate::ahcl::{Channel, ChannelMode, CollectiveGroup, Component, PortRef};
use crate::petri::{ArcDir, InterlacedNet};

pub fn translate_channel(
    c: &Component,
    ch: &Channel,
    opt: &TranslationOptions,
) -> Result<InterlacedNet, TranslateError> {
    Ok(channel_slice(&Ctx { c, opt: *opt }, ch)?.net)
}

pub fn translate_collective(
    c: &Component,
    g: &CollectiveGroup,
    opt: &TranslationOptions,
) -> Result<InterlacedNet, TranslateError> {
    Ok(collective_slice(&Ctx { c, opt: *opt }, g)?.net)
}

fn unbound(r: &PortRef) -> TranslateError {
    TranslateError::UnboundPort { unit: r.unit.name.clone(), port: r.path() }
}

pub(crate) fn channel_slice(ctx: &Ctx, ch: &Channel) -> Result<Slice, TranslateError> {
    let sender = ctx.c.resolve(&ch.sender).ok_or_else(|| unbound(&ch.sender))?;
    ctx.c.resolve(&ch.receiver).ok_or_else(|| unbound(&ch.receiver))?;
    let streams = ctx.streams(sender);
    let (sp, rp) = (ch.sender.path(), ch.receiver.path());
    let c = &ch.id.name;
    let mut s = Slice::default();
    if streams {
        s.mark(&kind_clear(c), 1);
    }
    match ch.mode {
        ChannelMode::Synchronous | ChannelMode::Ready => {
            let t = s.trans(&format!("chan_sync[{c}]"), None);
            s.merge_with(&t, &port_send(&sp));
            s.merge_with(&t, &port_recv(&rp));
            if streams {
                s.step(&t, &kind_clear(c), &kind_pending(c));
            }
        }
        ChannelMode::Buffered(_) => {
            let b = ctx.buffer_size(ch);
            let (free, used) = (chan_buffer_free(c), chan_buffer_used(c));
            s.mark(&free, b);
            s.place(&used);
            let put = s.trans(&format!("chan_put[{c}]"), None);
            s.merge_with(&put, &port_send(&sp));
            s.step(&put, &free, &used);
            let get = s.trans(&format!("chan_get[{c}]"), None);
            s.merge_with(&get, &port_recv(&rp));
            s.step(&get, &used, &free);
            if streams {
                circular_buffer(ctx, &mut s, ch, b, sender.nesting, &put, &get);
            }
        }
    }
    Ok(s)
}

/// Slot-by-slot memory of the kinds stored in a buffered stream channel.
/// The put stub leaves the kind pending; `buf_store` writes it at the tail.
/// The get stub raises a request; `buf_load` delivers the head slot's kind.
fn circular_buffer(ctx: &Ctx, s: &mut Slice, ch: &Channel, b: u32, n: u32, put: &str, get: &str) {
    let c = &ch.id.name;
    let request = format!("buf_request[{c}]");
    s.step(put, &kind_clear(c), &kind_pending(c));
    s.produce(get, &request, 1);
    let head = |k: u32| format!("buf_head[{c},{k}]");
    let tail = |k: u32| format!("buf_tail[{c},{k}]");
    let empty = |k: u32| format!("buf_slot_empty[{c},{k}]");
    let slot = |k: u32, j: u32| format!("buf_slot_flag[{c},{k},{j}]");
    let es = ctx.sender_entity(ch);
    for k in 0..b {
        s.mark(&head(k), u32::from(k == 0));
        s.mark(&tail(k), u32::from(k == 0));
        s.mark(&empty(k), 1);
        let next = (k + 1) % b;
        for j in 0..=n {
            let t = s.trans(&format!("buf_store[{c},{k},{j}]"), None);
            s.step(&t, &kind_pending(c), &kind_clear(c));
            s.step(&t, &tail(k), &tail(next));
            s.step(&t, &empty(k), &slot(k, j));
            s.read(&flag(&es, j), &t);
            let t = s.trans(&format!("buf_load[{c},{k},{j}]"), None);
            s.consume(&request, &t, 1);
            s.step(&t, &head(k), &head(next));
            s.step(&t, &slot(k, j), &empty(k));
            s.produce(&t, &delivered(c, j), 1);
        }
    }
}

/// One rendezvous transition shared by all members of the group.
pub(crate) fn collective_slice(ctx: &Ctx, g: &CollectiveGroup) -> Result<Slice, TranslateError> {
    let mut s = Slice::default();
    let mut kinds = Vec::new();
    for m in &g.members {
        let p = ctx.c.resolve(m).ok_or_else(|| unbound(m))?;
        kinds.push((p.stream, p.nesting));
    }
    kinds.dedup();
    if kinds.len() > 1 {
        return Err(TranslateError::ArityMismatch(g.id.name.clone()));
    }
    let t = s.trans(&collective(&g.id.name), Some(g.id.name.clone()));
    for m in &g.members {
        s.merge_with(&t, &port_do(&m.path()));
    }
    if ctx.opt.with_stream_protocol && kinds.first().is_some_and(|k| k.0) {
        s.produce(&t, &received(&g.id.name), 1);
    }
    Ok(s)
}

/// Ready mode, applied to the unfolded net. The sender side toggles an idle
/// place. A receiver preparing while the sender is idle closes the channel
/// for good, so the communication can never take place.
pub(crate) fn apply_ready(ctx: &Ctx, net: &mut InterlacedNet) -> Result<(), TranslateError> {
    for ch in &ctx.c.channels {
        if ch.mode != ChannelMode::Ready {
            continue;
        }
        let c = &ch.id.name;
        let find =
            |net: &InterlacedNet, id: &str| resolve(net, id).map(str::to_string).ok_or_else(|| unbound(&ch.receiver));
        let sp = find(net, &port_prepared(&ch.sender.path()))?;
        let rp = find(net, &port_prepared(&ch.receiver.path()))?;
        let (open, idle) = (chan_ready_is_open(c), chan_ready_sender_idle(c));
        net.place(&open, [super::own(&open)]);
        net.place(&idle, [super::own(&idle)]);
        net.mark(&open, 1);
        net.mark(&idle, 1);

        let s_prod: Vec<String> = net.producers(&sp).map(|(t, _)| t.to_string()).collect();
        let s_cons: Vec<String> = net.consumers(&sp).map(|(t, _)| t.to_string()).collect();
        for t in &s_prod {
            net.arc_in(&idle, t, 1);
        }
        for t in &s_cons {
            net.arc_out(t, &idle, 1);
        }
        let r_cons: Vec<String> = net.consumers(&rp).map(|(t, _)| t.to_string()).collect();
        for t in &r_cons {
            net.read_arc(&open, t);
        }
        let r_prod: Vec<String> = net.producers(&rp).map(|(t, _)| t.to_string()).collect();
        for t in r_prod {
            let early = format!("{t}_early");
            let label = net.transitions[&t].label.clone();
            net.transition(&early, label, []);
            let arcs: Vec<_> =
                net.arcs.iter().filter(|(k, _)| k.transition == t).map(|(k, w)| (k.clone(), *w)).collect();
            for (k, w) in arcs {
                match k.dir {
                    ArcDir::In => net.arc_in(&k.place, &early, w),
                    ArcDir::Out => net.arc_out(&early, &k.place, w),
                }
            }
            net.read_arc(&idle, &early);
            net.arc_in(&open, &early, 1);
            net.read_arc(&sp, &t);
        }
    }
    Ok(())
}
