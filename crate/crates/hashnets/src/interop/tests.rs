use super::*;
use crate::ahcl::{parse_configuration, parse_configuration_with};
use crate::petri::InterlacedNet;
use crate::translate::{translate_component, TranslationOptions};

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../fixtures/components/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn net_of(src: &str) -> InterlacedNet {
    translate_component(&parse_configuration(src).unwrap(), &TranslationOptions::default()).unwrap()
}

#[test]
fn skip_unit_exports_one_marked_place() {
    let n = net_of("component C { unit u { protocol { skip } } }");
    let x = export_pnml(&n).unwrap();
    assert_eq!(x.matches("<place ").count(), n.places.len());
    assert_eq!(x.matches("<transition ").count(), n.transitions.len());
    let back = import_pnml(&x).unwrap();
    assert_eq!(back.initial.values().sum::<u32>(), n.initial.values().sum::<u32>());
    isomorphic_by_id(&n, &back).unwrap();
}

#[test]
fn bare_skip_protocol_is_one_place() {
    let c = parse_configuration("component C { unit u { protocol { skip } } }").unwrap();
    let s = crate::translate::translate_unit(&c, &c.units[0], &TranslationOptions::default()).unwrap();
    let mut p = s.protocol.unfold().unwrap();
    // the component seeds the entry place
    let entry = p.places.keys().next().unwrap().clone();
    p.mark(&entry, 1);
    let x = export_pnml(&p).unwrap();
    assert_eq!(x.matches("<place ").count(), 1);
    assert_eq!(x.matches("<initialMarking><text>1</text>").count(), 1);
    assert_eq!(x.matches("<transition ").count(), 0);
}

#[test]
fn dining_b_round_trip_keeps_counts() {
    let c = parse_configuration_with(&fixture("dining_b.ahcl"), &[("N", 5)]).unwrap();
    let n = translate_component(&c, &TranslationOptions::default()).unwrap();
    let back = import_pnml(&export_pnml(&n).unwrap()).unwrap();
    assert_eq!(back.places.len(), n.places.len());
    assert_eq!(back.transitions.len(), n.transitions.len());
    assert_eq!(back.arcs.len(), n.arcs.len());
    isomorphic_by_id(&n, &back).unwrap();
}

#[test]
fn export_is_deterministic_and_ids_are_ncnames() {
    let n = net_of(&fixture("abp_reduced.ahcl"));
    let a = export_pnml(&n).unwrap();
    assert_eq!(a, export_pnml(&n.clone()).unwrap());
    for cap in a.split(" id=\"").skip(1) {
        let id = &cap[..cap.find('"').unwrap()];
        assert!(
            id.chars().all(|c| c.is_ascii_alphanumeric()) && id.chars().next().unwrap().is_ascii_alphabetic(),
            "{id}"
        );
    }
}

#[test]
fn lambda_labels_are_empty_names() {
    let mut n = InterlacedNet::new();
    n.place("p", []);
    n.transition("t", None, []);
    n.transition("u", Some("a<b".into()), []);
    n.arc_in("p", "t", 2);
    n.arc_out("u", "p", 1);
    n.mark("p", 3);
    let x = export_pnml(&n).unwrap();
    assert!(x.contains("<name><text></text></name>"));
    assert!(x.contains("a&lt;b"));
    let back = import_pnml(&x).unwrap();
    assert_eq!(back.transitions["t"].label, None);
    assert_eq!(back.transitions["u"].label.as_deref(), Some("a<b"));
    isomorphic_by_id(&n, &back).unwrap();
}

#[test]
fn foreign_documents_use_element_ids() {
    let x = r#"<pnml><net id="n" type="http://www.pnml.org/version-2009/grammar/ptnet"><page id="g">
        <place id="a"><initialMarking><text>2</text></initialMarking></place>
        <place id="b"/>
        <transition id="go"><name><text>fire</text></name></transition>
        <transition id="tau"/>
        <arc id="x" source="a" target="go"><inscription><text>2</text></inscription></arc>
        <arc id="y" source="go" target="b"/>
        </page></net></pnml>"#;
    let n = import_pnml(x).unwrap();
    assert_eq!(n.initial_of("a"), 2);
    assert_eq!(n.transitions["go"].label.as_deref(), Some("fire"));
    assert_eq!(n.transitions["tau"].label, None);
    assert_eq!(n.weight("a", "go", crate::petri::ArcDir::In), 2);
    assert_eq!(n.weight("b", "go", crate::petri::ArcDir::Out), 1);
}

#[test]
fn rejects_other_net_types_and_bad_xml() {
    let x = r#"<pnml><net id="n" type="http://www.pnml.org/version-2009/grammar/pt-hlpng"></net></pnml>"#;
    assert!(matches!(import_pnml(x), Err(InteropError::UnsupportedNetType(_))));
    assert!(matches!(import_pnml("<pnml><net"), Err(InteropError::Xml(_))));
    assert!(matches!(import_pnml("<pnml/>"), Err(InteropError::Invalid(_))));
}

#[test]
fn final_predicate_survives() {
    let n = net_of(&fixture("counter3.ahcl"));
    assert!(n.final_predicate.is_some());
    let back = import_pnml(&export_pnml(&n).unwrap()).unwrap();
    assert_eq!(back.final_predicate, n.final_predicate);
}

#[test]
fn reports_carry_the_schema() {
    #[derive(serde::Serialize)]
    struct R {
        states: usize,
    }
    let v = json_report("reach", &R { states: 4 });
    assert_eq!(v["schema"], 1);
    assert_eq!(v["kind"], "reach");
    assert_eq!(v["states"], 4);
}
