//! Stream synchronization protocol: flag places per stream entity, kind
//! selection for outputs, kind copying for inputs and the order
//! consistency extension.

use super::names::*;
use super::{Ctx, Slice, TranslateError};
use crate::ahcl::{ChannelMode, Direction, GroupKind};
use crate::behavior::{valid_successors, StreamKind};

pub(crate) fn selecting(entity: &str) -> String {
    format!("sp_selecting[{entity}]")
}

pub(crate) fn received(path: &str) -> String {
    format!("sp_received[{path}]")
}

pub(crate) fn any_activated(member: &str) -> String {
    format!("any_group_port_activated[{member}]")
}

pub(crate) fn kind_clear(c: &str) -> String {
    format!("chan_kind_clear[{c}]")
}

pub(crate) fn kind_pending(c: &str) -> String {
    format!("chan_kind_pending[{c}]")
}

pub(crate) fn delivered(c: &str, j: u32) -> String {
    format!("buf_delivered[{c},{j}]")
}

/// Moves the flag of `e` from level `i` to level `j`, atomically keeping
/// every flag/dual pair complementary. Same level: a plain test.
fn swap(s: &mut Slice, t: &str, e: &str, i: u32, j: u32) {
    if i == j {
        s.read(&flag(e, i), t);
    } else {
        s.consume(&flag(e, i), t, 1);
        s.consume(&dual(e, j), t, 1);
        s.produce(t, &flag(e, j), 1);
        s.produce(t, &dual(e, i), 1);
    }
}

fn flags(s: &mut Slice, e: &str, n: u32) {
    for i in 0..=n {
        s.mark(&flag(e, i), u32::from(i == n));
        s.mark(&dual(e, i), u32::from(i != n));
    }
}

/// Arcs tying an input's kind `j` to what the channel into `path` carried.
fn source(ctx: &Ctx, s: &mut Slice, t: &str, path: &str, j: u32) {
    let Some((_, ch)) = ctx.channel_into(path) else { return };
    let c = &ch.id.name;
    match ch.mode {
        ChannelMode::Synchronous | ChannelMode::Ready => {
            s.read(&flag(&ctx.sender_entity(ch), j), t);
            s.step(t, &kind_pending(c), &kind_clear(c));
        }
        ChannelMode::Buffered(_) => s.consume(&delivered(c, j), t, 1),
    }
}

/// Kind selection of an output entity before its port (or group) is
/// prepared. Reads the clear place of every outgoing channel so a kind is
/// not overwritten before the receiver copied it.
fn select(ctx: &Ctx, s: &mut Slice, e: &str, n: u32, target: &str, member_paths: &[String]) {
    let mut clear = Vec::new();
    for p in member_paths {
        for ch in ctx.channels_from(p) {
            clear.push(kind_clear(&ch.id.name));
        }
    }
    let sel = selecting(e);
    s.place(&sel);
    let variant = |s: &mut Slice, id: String, i: u32, j: u32, extra: &dyn Fn(&mut Slice, &str)| {
        let t = s.trans(&id, None);
        s.step(&t, &sel, target);
        swap(s, &t, e, i, j);
        for c in &clear {
            s.read(c, &t);
        }
        extra(s, &t);
    };
    if !ctx.opt.with_order_consistency {
        for i in 0..=n {
            for j in 0..=n {
                variant(s, format!("sp_set_flag[{e},{j},{i}]"), i, j, &|_, _| {});
            }
        }
        return;
    }
    let fresh = format!("sp_order_fresh[{e}]");
    let started = format!("sp_order_started[{e}]");
    s.mark(&fresh, 1);
    s.place(&started);
    for j in 0..=n {
        variant(s, format!("sp_set_flag_fresh[{e},{j}]"), n, j, &|s, t| s.step(t, &fresh, &started));
    }
    for i in 1..=n {
        let last = StreamKind::from_flag_index(i, n);
        for k in valid_successors(last, n) {
            let j = k.flag_index(n);
            variant(s, format!("sp_set_flag[{e},{j},{i}]"), i, j, &|s, t| s.read(&started, t));
        }
    }
    let t = s.trans(&format!("sp_order_fail_detect[{e}]"), None);
    s.consume(&sel, &t, 1);
    s.read(&flag(e, 0), &t);
    s.produce(&t, &sp_order_fail(e), 1);
}

/// Kind copy of an input entity after reception.
fn set(ctx: &Ctx, s: &mut Slice, id: &str, e: &str, n: u32, from: &str, to: &[String], src: Option<&str>) {
    for i in 0..=n {
        for j in 0..=n {
            let t = s.trans(&format!("{id}[{e},{j},{i}]"), None);
            s.consume(from, &t, 1);
            for p in to {
                s.produce(&t, p, 1);
            }
            swap(s, &t, e, i, j);
            if let Some(path) = src {
                source(ctx, s, &t, path, j);
            }
        }
    }
}

pub(crate) fn stream_slice(ctx: &Ctx) -> Result<Slice, TranslateError> {
    let mut s = Slice::default();
    for u in &ctx.c.units {
        for port in &u.ports {
            if !port.stream {
                continue;
            }
            let n = port.nesting;
            let path = format!("{}.{}", u.id, port.id);
            let members: Vec<String> = port.members().iter().map(|m| format!("{path}.{}", m.id)).collect();
            match (port.group_kind(), port.direction) {
                (None, Direction::Collective) => {
                    if ctx.collective_of(&u.id.name, &port.id.name).is_none() {
                        flags(&mut s, &path, n);
                        set(ctx, &mut s, "sp_set_flag", &path, n, &received(&path), &[port_complete(&path)], None);
                    }
                }
                (None, Direction::Output) => {
                    flags(&mut s, &path, n);
                    select(ctx, &mut s, &path, n, &port_prepared(&path), std::slice::from_ref(&path));
                }
                (None, Direction::Input) => {
                    flags(&mut s, &path, n);
                    set(ctx, &mut s, "sp_set_flag", &path, n, &received(&path), &[port_complete(&path)], Some(&path));
                }
                (Some(_), Direction::Output) => {
                    flags(&mut s, &path, n);
                    select(ctx, &mut s, &path, n, &group_prepare(&path), &members);
                }
                (Some(GroupKind::Any), _) => {
                    flags(&mut s, &path, n);
                    for m in &members {
                        let id = format!("any_group_copy_flag[{m}]");
                        for i in 0..=n {
                            for j in 0..=n {
                                let t = s.trans(&format!("{id}[{j},{i}]"), None);
                                s.step(&t, &any_activated(m), &group_complete(&path));
                                swap(&mut s, &t, &path, i, j);
                                source(ctx, &mut s, &t, m, j);
                            }
                        }
                    }
                }
                (Some(GroupKind::All), _) => {
                    flags(&mut s, &path, n);
                    for m in &members {
                        flags(&mut s, m, n);
                        set(ctx, &mut s, "sp_set_flag", m, n, &received(m), &[port_complete(m)], Some(m));
                    }
                    for i in 0..=n {
                        for j in 0..=n {
                            let t = s.trans(&format!("group_join[{path},{j},{i}]"), Some(format!("{}?", port.id)));
                            for m in &members {
                                s.consume(&port_complete(m), &t, 1);
                                s.read(&flag(m, j), &t);
                            }
                            s.produce(&t, &group_complete(&path), 1);
                            swap(&mut s, &t, &path, i, j);
                        }
                    }
                }
            }
        }
    }
    for g in &ctx.c.collectives {
        let mut ns = Vec::new();
        for m in &g.members {
            let p = ctx
                .c
                .resolve(m)
                .ok_or_else(|| TranslateError::UnboundPort { unit: m.unit.name.clone(), port: m.port.name.clone() })?;
            ns.push((p.stream, p.nesting));
        }
        if ns.is_empty() || !ns[0].0 {
            continue;
        }
        let n = ns[0].1;
        let e = &g.id.name;
        flags(&mut s, e, n);
        let completes: Vec<String> = g.members.iter().map(|m| port_complete(&m.path())).collect();
        set(ctx, &mut s, "sp_set_flag", e, n, &received(e), &completes, None);
    }
    Ok(s)
}
