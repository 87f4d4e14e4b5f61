//! Node ids produced by the translator. Analysis macros build on these.
//!
//! Ids are those of the slices; after unfolding a node may live under the id
//! of another member of its class, so look them up with [`resolve`].

use super::own;
use crate::petri::InterlacedNet;

pub fn process_started(u: &str) -> String {
    format!("process_started[{u}]")
}

pub fn process_finished(u: &str) -> String {
    format!("process_finished[{u}]")
}

pub fn process_restart(u: &str) -> String {
    format!("process_restart[{u}]")
}

pub fn process_restart_enabled(u: &str) -> String {
    format!("process_restart_enabled[{u}]")
}

pub fn process_restart_disable(u: &str) -> String {
    format!("process_restart_disable[{u}]")
}

pub fn process_restart_disabled(u: &str) -> String {
    format!("process_restart_disabled[{u}]")
}

pub fn program_running() -> String {
    "program_running".into()
}

pub fn program_end_prepare() -> String {
    "program_end_prepare".into()
}

pub fn program_end_ready() -> String {
    "program_end_ready".into()
}

pub fn processes_all_join() -> String {
    "processes_all_join".into()
}

pub fn program_end() -> String {
    "program_end".into()
}

pub fn protocol_fail(u: &str) -> String {
    format!("protocol_fail[{u}]")
}

pub fn sem_counter(u: &str, s: &str) -> String {
    format!("sem_counter[{u}.{s}]")
}

/// Control node of the protocol slice: `role[unit:path]`.
pub fn control(role: &str, u: &str, path: &str) -> String {
    format!("{role}[{u}:{path}]")
}

pub fn port_prepared(path: &str) -> String {
    format!("port_prepared[{path}]")
}

pub fn port_complete(path: &str) -> String {
    format!("port_complete[{path}]")
}

pub fn port_send(path: &str) -> String {
    format!("port_send[{path}]")
}

pub fn port_recv(path: &str) -> String {
    format!("port_recv[{path}]")
}

pub fn port_do(path: &str) -> String {
    format!("port_do[{path}]")
}

pub fn group_prepare(path: &str) -> String {
    format!("group_prepare[{path}]")
}

pub fn group_complete(path: &str) -> String {
    format!("group_complete[{path}]")
}

pub fn group_distribute(path: &str) -> String {
    format!("group_distribute[{path}]")
}

pub fn group_join(path: &str) -> String {
    format!("group_join[{path}]")
}

pub fn chan_buffer_free(c: &str) -> String {
    format!("chan_buffer_free[{c}]")
}

pub fn chan_buffer_used(c: &str) -> String {
    format!("chan_buffer_used[{c}]")
}

pub fn chan_ready_is_open(c: &str) -> String {
    format!("chan_ready_is_open[{c}]")
}

pub fn chan_ready_sender_idle(c: &str) -> String {
    format!("chan_ready_sender_idle[{c}]")
}

pub fn collective(g: &str) -> String {
    format!("collective[{g}]")
}

pub fn flag(entity: &str, i: u32) -> String {
    format!("stream_port_flag[{entity},{i}]")
}

pub fn dual(entity: &str, i: u32) -> String {
    format!("stream_port_flag_dual[{entity},{i}]")
}

pub fn sp_order_fail(entity: &str) -> String {
    format!("sp_order_fail[{entity}]")
}

/// Id under which the place created as `id` lives in `net`.
pub fn resolve<'a>(net: &'a InterlacedNet, id: &str) -> Option<&'a str> {
    if let Some((k, _)) = net.places.get_key_value(id) {
        return Some(k.as_str());
    }
    let q = own(id);
    net.places.values().find(|p| p.qualifiers.contains(&q)).map(|p| p.id.as_str())
}

/// Like [`resolve`] for transitions.
pub fn resolve_transition<'a>(net: &'a InterlacedNet, id: &str) -> Option<&'a str> {
    if let Some((k, _)) = net.transitions.get_key_value(id) {
        return Some(k.as_str());
    }
    let q = own(id);
    net.transitions.values().find(|t| t.qualifiers.contains(&q)).map(|t| t.id.as_str())
}
