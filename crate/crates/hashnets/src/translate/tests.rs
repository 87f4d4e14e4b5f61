use super::*;
use crate::ahcl::parse_configuration;
use crate::petri::{reachability_graph, terminal_language, CompiledNet, Limits, Marking};
use std::collections::BTreeSet;

fn build(src: &str, opt: TranslationOptions) -> InterlacedNet {
    translate_component(&parse_configuration(src).unwrap(), &opt).unwrap()
}

fn words(net: &InterlacedNet, maxlen: usize) -> BTreeSet<String> {
    let c = net.compile().unwrap();
    let g = reachability_graph(&c, Limits::default());
    terminal_language(&c, &g, maxlen).unwrap().words.into_iter().map(|w| w.join(" ")).collect()
}

fn fire(c: &CompiledNet, m: &Marking, t: &str) -> Marking {
    c.fire(m, t).unwrap_or_else(|e| panic!("{e}"))
}

fn dead(c: &CompiledNet, m: &Marking) -> bool {
    c.enabled_transitions(m).next().is_none()
}

#[test]
fn skip_is_one_place() {
    let c = parse_configuration("component C { unit u { protocol { skip } } }").unwrap();
    let s = translate_unit(&c, &c.units[0], &TranslationOptions::default()).unwrap();
    let p = s.protocol.unfold().unwrap();
    assert_eq!(p.places.len(), 1);
    assert_eq!(p.transitions.len(), 0);
}

#[test]
fn seq_of_two_activations() {
    let c =
        parse_configuration("component C { unit u { ports { out a; in b; } protocol { seq { a!; b? } } } }").unwrap();
    let s = translate_unit(&c, &c.units[0], &TranslationOptions::default()).unwrap();
    let starts = s.protocol.transitions.keys().filter(|t| t.starts_with("activate_start")).count();
    assert_eq!(starts, 2);
    assert!(s.protocol.places.contains_key("seq_link[u:0.0]"));
}

#[test]
fn single_input_port_slice() {
    let c = parse_configuration("component C { unit u { ports { in p; } } }").unwrap();
    let n = translate_ports(&c, &c.units[0], &TranslationOptions::default());
    assert_eq!(n.places.len(), 2);
    assert_eq!(n.transitions.len(), 1);
    assert_eq!(n.transitions[0].label.as_deref(), Some("p?"));
}

#[test]
fn component_termination() {
    let n = build("component C { unit a { protocol { skip } } unit b { protocol { skip } } }", Default::default());
    assert_eq!(words(&n, 4), BTreeSet::from([String::new()]));
    let n = build("component C { }", Default::default());
    let c = n.compile().unwrap();
    let m = fire(&c, &c.initial, "program_end_prepare");
    assert!(c.is_final(&fire(&c, &m, "processes_all_join")).unwrap());
}

#[test]
fn repetitive_unit_runs_twice() {
    let n = build(
        "component C { unit r repetitive { ports { out a; } protocol { a! } } unit s { protocol { skip } } }",
        Default::default(),
    );
    assert!(n.transitions.contains_key("process_restart[r]"));
    assert!(n.places.contains_key("process_restart_enabled[r]"));
    assert!(words(&n, 3).contains("a! a!"));
    // once the end is prepared, restart is no longer possible
    let c = n.compile().unwrap();
    let g = reachability_graph(&c, Limits::default());
    let end = c.place_index("program_end").unwrap();
    let restart = c.transition_index("process_restart[r]").unwrap();
    for i in 0..g.len() {
        let m = g.marking(i);
        if m.get(end) > 0 {
            assert!(!c.is_enabled(&m, restart));
        }
    }
}

#[test]
fn counter_and_par_languages() {
    let n = build("component C { unit u { ports { out a; } protocol { repeat a! counter 3 } } }", Default::default());
    assert_eq!(words(&n, 8), BTreeSet::from(["a! a! a!".to_string()]));
    let n = build("component C { unit u { ports { out a; out b; } protocol { par { a!; b! } } } }", Default::default());
    assert_eq!(words(&n, 8), BTreeSet::from(["a! b!".to_string(), "b! a!".to_string()]));
}

#[test]
fn any_group_drains_other_members() {
    let n = build("component C { unit u { ports { in group g any { x, y }; } protocol { g? } } }", Default::default());
    let c = n.compile().unwrap();
    let m = fire(&c, &c.initial, "activate_start[u:0]");
    let m = fire(&c, &m, "group_distribute[u.g]");
    let (px, py) = (c.place_index("port_prepared[u.g.x]").unwrap(), c.place_index("port_prepared[u.g.y]").unwrap());
    assert_eq!((m.get(px), m.get(py)), (1, 1));
    let m = fire(&c, &m, "port_recv[u.g.x]");
    assert_eq!((m.get(px), m.get(py)), (0, 0));
    assert!(!c.enabled(&m, "port_recv[u.g.y]").unwrap());
}

#[test]
fn all_group_needs_every_member() {
    let n = build("component C { unit u { ports { out group g all { x, y }; } protocol { g! } } }", Default::default());
    let c = n.compile().unwrap();
    let m = fire(&c, &c.initial, "activate_start[u:0]");
    let m = fire(&c, &m, "group_distribute[u.g]");
    let m = fire(&c, &m, "port_send[u.g.x]");
    assert!(!c.enabled(&m, "group_join[u.g]").unwrap());
    let m = fire(&c, &m, "port_send[u.g.y]");
    assert!(c.enabled(&m, "group_join[u.g]").unwrap());
    assert_eq!(words(&n, 4), BTreeSet::from(["g!".to_string()]));
}

#[test]
fn synchronous_channel_merges_transfers() {
    let n = build(
        "component C { unit a { ports { out s; } protocol { s! } } unit b { ports { in r; } protocol { r? } } connect a.s -> b.r; }",
        Default::default(),
    );
    let labelled: Vec<_> = n.transitions.values().filter_map(|t| t.label.clone()).collect();
    assert_eq!(labelled, vec!["r?|s!".to_string()]);
    assert_eq!(words(&n, 4), BTreeSet::from(["r?|s!".to_string()]));
}

#[test]
fn buffered_channel_blocks_when_full() {
    let n = build(
        "component C { unit a { ports { out s; } protocol { seq { s!; s! } } } unit b { ports { in r; } protocol { skip } }
         connect a.s -> b.r mode buffered(1); }",
        Default::default(),
    );
    let c = n.compile().unwrap();
    let g = reachability_graph(&c, Limits::default());
    let deads: Vec<_> = (0..g.len()).filter(|&i| dead(&c, &g.marking(i))).collect();
    assert_eq!(deads.len(), 1);
    let m = g.marking(deads[0]);
    assert!(!c.is_final(&m).unwrap());
    assert_eq!(m.get(c.place_index("chan_buffer_used[c0]").unwrap()), 1);
    assert_eq!(m.get(c.place_index("port_prepared[a.s]").unwrap()), 1);
}

#[test]
fn ready_channel_receiver_first_deadlocks() {
    let n = build(
        "component C { unit a { ports { out s; } protocol { s! } } unit b { ports { in r; } protocol { r? } } connect a.s -> b.r mode ready; }",
        Default::default(),
    );
    let c = n.compile().unwrap();
    let m = fire(&c, &c.initial, "activate_start[b:0]_early");
    let m = fire(&c, &m, "activate_start[a:0]");
    assert!(dead(&c, &m));
    assert!(!c.is_final(&m).unwrap());
    // sender first communicates normally
    assert_eq!(words(&n, 3), BTreeSet::from(["r?|s!".to_string()]));
}

#[test]
fn stream_flags_per_level() {
    let n = build("component C { unit u { ports { out s stream(2); } protocol { s! } } }", Default::default());
    let flags = n.places.keys().filter(|p| p.starts_with("stream_port_flag[u.s,")).count();
    let duals = n.places.keys().filter(|p| p.starts_with("stream_port_flag_dual[u.s,")).count();
    assert_eq!((flags, duals), (3, 3));
    let none = build(
        "component C { unit u { ports { out s stream(2); } protocol { s! } } }",
        TranslationOptions::without_streams(),
    );
    assert!(!none.places.keys().any(|p| p.starts_with("stream_port_flag")));
}

#[test]
fn buffered_stream_keeps_kind_order() {
    let src = "component C { unit a { ports { out s stream(1); } protocol { seq { s!; s! } } }
        unit b { ports { in r stream(1); } protocol { seq { r?; r? } } } connect a.s -> b.r mode buffered(2); }";
    let n = build(src, Default::default());
    let c = n.compile().unwrap();
    let seq = [
        "activate_start[a:0.0]",
        "sp_set_flag[a.s,1,1]",
        "chan_put[c0]",
        "buf_store[c0,0,1]",
        "activate_stop[a:0.0]",
        "activate_start[a:0.1]",
        "sp_set_flag[a.s,0,1]",
        "chan_put[c0]",
        "buf_store[c0,1,0]",
        "activate_stop[a:0.1]",
        "activate_start[b:0.0]",
        "chan_get[c0]",
        "buf_load[c0,0,1]",
        "sp_set_flag[b.r,1,1]",
    ];
    let mut m = c.initial.clone();
    for t in seq {
        m = fire(&c, &m, t);
    }
    let f = |m: &Marking, i| m.get(c.place_index(&names::flag("b.r", i)).unwrap());
    assert_eq!((f(&m, 1), f(&m, 0)), (1, 0));
    for t in
        ["activate_stop[b:0.0]", "activate_start[b:0.1]", "chan_get[c0]", "buf_load[c0,1,0]", "sp_set_flag[b.r,0,1]"]
    {
        m = fire(&c, &m, t);
    }
    assert_eq!((f(&m, 1), f(&m, 0)), (0, 1));
}

#[test]
fn collective_waits_for_all_members() {
    let src = "component C {
        unit a { ports { collective k; } protocol { do k } }
        unit b { ports { collective k; } protocol { do k } }
        unit c { ports { collective k; } protocol { skip } }
        collective g { a.k, b.k, c.k } }";
    let n = build(src, Default::default());
    let c = n.compile().unwrap();
    let m = fire(&c, &c.initial, "activate_start[a:0]");
    let m = fire(&c, &m, "activate_start[b:0]");
    assert!(!c.enabled(&m, "collective[g]").unwrap());
    let one = build(
        "component C { unit a { ports { collective k; } protocol { do k } } collective g { a.k } }",
        Default::default(),
    );
    assert_eq!(words(&one, 3), BTreeSet::from(["g".to_string()]));
}

#[test]
fn collective_nesting_mismatch() {
    let src = "component C { unit a { ports { collective k stream(1); } } unit b { ports { collective k stream(2); } }
        collective g { a.k, b.k } }";
    let r = translate_component(&parse_configuration(src).unwrap(), &Default::default());
    assert_eq!(r, Err(TranslateError::ArityMismatch("g".into())));
}

#[test]
fn order_consistency_requires_streams() {
    let c = parse_configuration("component C { }").unwrap();
    let opt = TranslationOptions { with_stream_protocol: false, with_order_consistency: true, buffer_default: 1 };
    assert!(matches!(translate_component(&c, &opt), Err(TranslateError::InvalidOptions(_))));
}

#[test]
fn until_exits_on_terminator() {
    let src = "component C { unit u { ports { out a stream(1); } protocol { repeat a! until a } } }";
    let n = build(src, Default::default());
    assert_eq!(words(&n, 3), BTreeSet::from(["a!".to_string(), "a! a!".to_string(), "a! a! a!".to_string()]));
    let strict = build(src, TranslationOptions::with_order_consistency());
    assert_eq!(words(&strict, 3).len(), 3);
}

#[test]
fn unbound_semaphore() {
    let mut c = parse_configuration("component C { unit u { protocol { signal s } } }").unwrap();
    c.units[0].protocol.semaphores.clear();
    assert!(matches!(translate_component(&c, &Default::default()), Err(TranslateError::UnboundSemaphore { .. })));
}
