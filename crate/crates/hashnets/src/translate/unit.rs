use super::names::*;
use super::{Ctx, Slice, TranslateError, TranslationOptions};
use crate::ahcl::{Component, Direction, GroupKind, Ident, Port, Unit};
use crate::behavior::{
    evaluate_stream_predicate, Action, NeverActivated, Polarity, StreamKind, StreamPredicate, TriBool,
};
use crate::petri::{InterlacedNet, NetExpr};
use std::collections::BTreeMap;

/// Υ^U output: the protocol and port slices of one unit.
#[derive(Debug, Clone)]
pub struct SliceSet {
    pub unit: String,
    pub protocol: InterlacedNet,
    pub ports: InterlacedNet,
    /// Entry and exit places of the protocol slice.
    pub start: String,
    pub stop: String,
}

impl SliceSet {
    pub fn expr(&self) -> NetExpr {
        NetExpr::Compose(vec![NetExpr::Net(self.protocol.clone()), NetExpr::Net(self.ports.clone())])
    }
}

pub fn translate_unit(c: &Component, u: &Unit, opt: &TranslationOptions) -> Result<SliceSet, TranslateError> {
    let ctx = Ctx { c, opt: *opt };
    let start = process_started(&u.id.name);
    let stop = process_finished(&u.id.name);
    let mut b = Builder { ctx: &ctx, u, s: Slice::default() };
    b.action(&u.protocol.action, "0", &start, &stop, 0)?;
    Ok(SliceSet { unit: u.id.name.clone(), protocol: b.s.net, ports: ports_slice(&ctx, u).net, start, stop })
}

/// Port and group nets of `u`.
pub fn translate_ports(c: &Component, u: &Unit, opt: &TranslationOptions) -> InterlacedNet {
    ports_slice(&Ctx { c, opt: *opt }, u).net
}

/// An activation node of a protocol and its path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Activation {
    pub path: String,
    pub port: String,
    pub polarity: Option<Polarity>,
}

/// Every port activation of `u` in protocol order, with the path used in
/// control node ids (`activate_on[u:path]` and so on).
pub fn activations(u: &Unit) -> Vec<Activation> {
    fn go(a: &Action, path: &str, out: &mut Vec<Activation>) {
        match a {
            Action::Activate(p, pol) => {
                out.push(Activation { path: path.into(), port: p.name.clone(), polarity: Some(*pol) })
            }
            Action::Do(p) => out.push(Activation { path: path.into(), port: p.name.clone(), polarity: None }),
            _ => {
                for (i, c) in a.children().into_iter().enumerate() {
                    go(c, &format!("{path}.{i}"), out);
                }
            }
        }
    }
    let mut out = Vec::new();
    go(&u.protocol.action, "0", &mut out);
    out
}

struct Builder<'a, 'c> {
    ctx: &'a Ctx<'c>,
    u: &'c Unit,
    s: Slice,
}

impl<'c> Builder<'_, 'c> {
    fn id(&self, role: &str, path: &str) -> String {
        control(role, &self.u.id.name, path)
    }

    fn action(&mut self, a: &Action, path: &str, start: &str, stop: &str, d: u32) -> Result<(), TranslateError> {
        self.s.place(start);
        self.s.place(stop);
        match a {
            Action::Skip => self.s.glue(start, stop),
            Action::Seq(v) | Action::Par(v) if v.is_empty() => self.s.glue(start, stop),
            Action::Seq(v) => {
                let mut from = start.to_string();
                for (i, x) in v.iter().enumerate() {
                    let to =
                        if i + 1 == v.len() { stop.to_string() } else { self.id("seq_link", &format!("{path}.{i}")) };
                    self.action(x, &format!("{path}.{i}"), &from, &to, d)?;
                    from = to;
                }
            }
            Action::Par(v) => {
                let fork = self.s.trans(&self.id("par_fork", path), None);
                let join = self.s.trans(&self.id("par_join", path), None);
                self.s.consume(start, &fork, 1);
                self.s.produce(&join, stop, 1);
                for (i, x) in v.iter().enumerate() {
                    let p = format!("{path}.{i}");
                    let (b, e) = (self.id("par_begin", &p), self.id("par_end", &p));
                    self.s.produce(&fork, &b, 1);
                    self.s.consume(&e, &join, 1);
                    self.action(x, &p, &b, &e, d)?;
                }
            }
            Action::Alt(v) => {
                for (i, x) in v.iter().enumerate() {
                    let p = format!("{path}.{i}");
                    let t = self.s.trans(&self.id("alt_select_branch", &p), None);
                    let b = self.id("alt_branch", &p);
                    self.s.step(&t, start, &b);
                    self.action(x, &p, &b, stop, d)?;
                }
            }
            Action::RepeatUntil(body, pred) => {
                let check = self.id("ru_checking_conditions", path);
                self.action(body, &format!("{path}.0"), start, &check, d + 1)?;
                self.decision(pred, d, path, &check, ["ru_terminate", "ru_loop", "ru_fail"], [stop, start])?;
            }
            Action::If(pred, then, other) => {
                let (tb, eb) = (self.id("if_then_branch", path), self.id("if_else_branch", path));
                self.decision(pred, d, path, start, ["if_then", "if_else", "if_fail"], [&tb, &eb])?;
                self.action(then, &format!("{path}.0"), &tb, stop, d + 1)?;
                self.action(other, &format!("{path}.1"), &eb, stop, d + 1)?;
            }
            Action::RepeatCounter(body, n, _) => {
                let n = (*n).max(1);
                let (rem, done, ready, inner) = (
                    self.id("rc_remaining", path),
                    self.id("rc_performed", path),
                    self.id("rc_ready", path),
                    self.id("rc_body", path),
                );
                let enter = self.s.trans(&self.id("rc_enter", path), None);
                self.s.step(&enter, start, &ready);
                self.s.produce(&enter, &rem, n);
                let it = self.s.trans(&self.id("rc_iterate", path), None);
                self.s.consume(&ready, &it, 1);
                self.s.consume(&rem, &it, 1);
                self.s.produce(&it, &inner, 1);
                self.s.produce(&it, &done, 1);
                let exit = self.s.trans(&self.id("rc_exit", path), None);
                self.s.consume(&ready, &exit, 1);
                self.s.consume(&done, &exit, n);
                self.s.produce(&exit, stop, 1);
                self.action(body, &format!("{path}.0"), &inner, &ready, d)?;
            }
            Action::RepeatForever(body) => {
                self.action(body, &format!("{path}.0"), start, start, d)?;
            }
            Action::Signal(sem) | Action::Wait(sem) => {
                self.semaphore(sem)?;
                let counter = sem_counter(&self.u.id.name, &sem.name);
                let signal = matches!(a, Action::Signal(_));
                let t = self.s.trans(&self.id(if signal { "signal" } else { "wait" }, path), None);
                self.s.step(&t, start, stop);
                if signal {
                    self.s.produce(&t, &counter, 1);
                } else {
                    self.s.consume(&counter, &t, 1);
                }
            }
            Action::Activate(p, _) | Action::Do(p) => {
                let port = self.ctx.port(self.u, &p.name)?;
                let (target, source) = activation_ends(self.ctx, self.u, port);
                let on = self.id("activate_on", path);
                let t = self.s.trans(&self.id("activate_start", path), None);
                self.s.step(&t, start, &on);
                self.s.produce(&t, &target, 1);
                let t = self.s.trans(&self.id("activate_stop", path), None);
                self.s.consume(&on, &t, 1);
                self.s.consume(&source, &t, 1);
                self.s.produce(&t, stop, 1);
            }
        }
        Ok(())
    }

    fn semaphore(&self, s: &Ident) -> Result<(), TranslateError> {
        if self.u.protocol.semaphores.iter().any(|x| x.name == s.name) {
            Ok(())
        } else {
            Err(TranslateError::UnboundSemaphore { unit: self.u.id.name.clone(), sem: s.name.clone() })
        }
    }

    /// Transitions out of `from` for the three outcomes of `pred`. With the
    /// stream protocol each truth assignment of the tested ports gets its
    /// own variant testing flag or dual places through read arcs; without
    /// it the choice is free and never fails.
    fn decision(
        &mut self,
        pred: &StreamPredicate,
        d: u32,
        path: &str,
        from: &str,
        roles: [&str; 3],
        targets: [&str; 2],
    ) -> Result<(), TranslateError> {
        let fail = protocol_fail(&self.u.id.name);
        if !self.ctx.opt.with_stream_protocol {
            for (role, to) in roles.iter().zip(targets) {
                let t = self.s.trans(&self.id(role, path), None);
                self.s.step(&t, from, to);
            }
            return Ok(());
        }
        let mut vars: Vec<(String, String, u32)> = Vec::new();
        for id in pred.ports() {
            if vars.iter().any(|(n, _, _)| *n == id.name) {
                continue;
            }
            let port = self.ctx.port(self.u, &id.name)?;
            if !port.stream {
                return Err(TranslateError::NotAStream { port: format!("{}.{}", self.u.id, id) });
            }
            vars.push((id.name.clone(), self.ctx.entity(self.u, port), port.nesting));
        }
        for mask in 0u32..(1 << vars.len()) {
            let truth: Vec<bool> = (0..vars.len()).map(|k| mask & (1 << k) != 0).collect();
            let last: BTreeMap<String, Option<StreamKind>> = vars
                .iter()
                .zip(&truth)
                .map(|((n, _, _), &v)| (n.clone(), Some(if v { StreamKind::Eos(0) } else { StreamKind::Data })))
                .collect();
            let value = evaluate_stream_predicate(pred, &last, d, NeverActivated::False)
                .map_err(|e| TranslateError::UnboundPort { unit: self.u.id.name.clone(), port: e.to_string() })?;
            let (role, to) = match value {
                TriBool::True => (roles[0], targets[0]),
                TriBool::False => (roles[1], targets[1]),
                TriBool::Fail => (roles[2], fail.as_str()),
            };
            // every combination of true-witness flags
            let mut witnesses: Vec<Vec<String>> = vec![vec![]];
            for ((_, e, n), &v) in vars.iter().zip(&truth) {
                let top = d.min(n - 1);
                if v {
                    let mut next = Vec::new();
                    for w in &witnesses {
                        for i in 0..=top {
                            let mut w = w.clone();
                            w.push(flag(e, i));
                            next.push(w);
                        }
                    }
                    witnesses = next;
                } else {
                    for w in &mut witnesses {
                        w.extend((0..=top).map(|i| dual(e, i)));
                    }
                }
            }
            let bits: String = truth.iter().map(|&v| if v { 'T' } else { 'F' }).collect();
            for (k, w) in witnesses.iter().enumerate() {
                let t = self.s.trans(&self.id(role, &format!("{path}#{bits}/{k}")), None);
                self.s.step(&t, from, to);
                for p in w {
                    self.s.read(p, &t);
                }
            }
        }
        Ok(())
    }
}

/// The place an activation marks and the one it waits on.
pub(crate) fn activation_ends(ctx: &Ctx, u: &Unit, port: &Port) -> (String, String) {
    let path = format!("{}.{}", u.id, port.id);
    let target = if ctx.streams(port) && port.direction == Direction::Output {
        super::stream::selecting(&path)
    } else if port.group_kind().is_some() {
        group_prepare(&path)
    } else {
        port_prepared(&path)
    };
    let source = if port.group_kind().is_some() { group_complete(&path) } else { port_complete(&path) };
    (target, source)
}

fn ports_slice(ctx: &Ctx, u: &Unit) -> Slice {
    use super::stream::{any_activated, received};
    let mut s = Slice::default();
    for port in &u.ports {
        let path = format!("{}.{}", u.id, port.id);
        let streams = ctx.streams(port);
        let name = &port.id.name;
        match (port.group_kind(), port.direction) {
            (None, Direction::Output) => {
                let t = s.trans(&port_send(&path), Some(format!("{name}!")));
                s.step(&t, &port_prepared(&path), &port_complete(&path));
            }
            (None, Direction::Input) => {
                let t = s.trans(&port_recv(&path), Some(format!("{name}?")));
                let to = if streams { received(&path) } else { port_complete(&path) };
                s.step(&t, &port_prepared(&path), &to);
                s.place(&port_complete(&path));
            }
            (None, Direction::Collective) => {
                let grouped = ctx.collective_of(&u.id.name, name).is_some();
                let t = s.trans(&port_do(&path), if grouped { None } else { Some(name.clone()) });
                s.consume(&port_prepared(&path), &t, 1);
                s.place(&port_complete(&path));
                match (grouped, streams) {
                    (true, true) => {}
                    (false, true) => s.produce(&t, &received(&path), 1),
                    (_, false) => s.produce(&t, &port_complete(&path), 1),
                }
            }
            (Some(kind), dir) => {
                let input = dir == Direction::Input;
                let sym = if input { '?' } else { '!' };
                let dist = s.trans(&group_distribute(&path), None);
                s.consume(&group_prepare(&path), &dist, 1);
                s.place(&group_complete(&path));
                let members: Vec<String> = port.members().iter().map(|m| format!("{path}.{}", m.id)).collect();
                for m in &members {
                    s.produce(&dist, &port_prepared(m), 1);
                }
                for m in &members {
                    let xfer = if input { port_recv(m) } else { port_send(m) };
                    match kind {
                        GroupKind::Any => {
                            let t = s.trans(&xfer, Some(format!("{name}{sym}")));
                            for other in &members {
                                s.consume(&port_prepared(other), &t, 1);
                            }
                            let to = if input && streams { any_activated(m) } else { group_complete(&path) };
                            s.produce(&t, &to, 1);
                        }
                        GroupKind::All => {
                            let t = s.trans(&xfer, None);
                            let to = if input && streams { received(m) } else { port_complete(m) };
                            s.step(&t, &port_prepared(m), &to);
                            s.place(&port_complete(m));
                        }
                    }
                }
                if kind == GroupKind::All && !(input && streams) {
                    let j = s.trans(&group_join(&path), Some(format!("{name}{sym}")));
                    for m in &members {
                        s.consume(&port_complete(m), &j, 1);
                    }
                    s.produce(&j, &group_complete(&path), 1);
                }
            }
        }
    }
    s
}
