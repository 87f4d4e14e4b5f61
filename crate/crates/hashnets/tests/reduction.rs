//! Stubborn-set exploration against the full graph on a real configuration.

use hashnets::ahcl::parse_configuration_with;
use hashnets::analyze::find_deadlocks;
use hashnets::petri::{reachability_graph, reduced_reachability_graph, Limits};
use hashnets::translate::{translate_component, TranslationOptions};
use std::collections::BTreeSet;

#[test]
fn dining_a_three_keeps_every_deadlock() {
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/components/dining_a.ahcl"))
        .unwrap();
    let c = parse_configuration_with(&src, &[("N", 3)]).unwrap();
    let net = translate_component(&c, &TranslationOptions::without_streams()).unwrap().compile().unwrap();
    let full = reachability_graph(&net, Limits::states(2_000_000));
    let red = reduced_reachability_graph(&net, Limits::states(2_000_000));
    assert!(!full.truncated && !red.truncated);
    assert!(red.len() < full.len());
    let dead = |g: &hashnets::petri::ReachGraph| -> BTreeSet<Vec<u32>> {
        find_deadlocks(&net, g).dead.iter().map(|&n| g.marking(n).0).collect()
    };
    let (a, b) = (dead(&full), dead(&red));
    assert!(!a.is_empty());
    assert_eq!(a, b);
}
