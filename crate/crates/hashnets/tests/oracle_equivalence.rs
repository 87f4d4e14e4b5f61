//! Terminal languages of translated single-unit protocols against the trace
//! oracle, under the three translation settings.

use hashnets::ahcl::parse_configuration;
use hashnets::behavior::{enumerate_traces, Valuation};
use hashnets::petri::{reachability_graph, terminal_language, Limits};
use hashnets::translate::{translate_component, TranslationOptions};
use std::collections::BTreeSet;
use std::path::PathBuf;

const MAXLEN: usize = 8;

fn corpus() -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/protocols");
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "ahcl"))
        .map(|p| (p.file_stem().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn compare(opt: TranslationOptions, valuation: Valuation) {
    let mut failures = Vec::new();
    for (name, src) in corpus() {
        let c = parse_configuration(&src).unwrap();
        let net = translate_component(&c, &opt).unwrap().compile().unwrap();
        let g = reachability_graph(&net, Limits::states(500_000));
        assert!(!g.truncated, "{name}: graph truncated");
        let lang: BTreeSet<Vec<String>> = terminal_language(&net, &g, MAXLEN).unwrap().words;
        let oracle = enumerate_traces(&c.units[0], &valuation, MAXLEN).unwrap().complete;
        if lang != oracle {
            let extra: Vec<_> = lang.difference(&oracle).take(3).collect();
            let missing: Vec<_> = oracle.difference(&lang).take(3).collect();
            failures.push(format!("{name}: net-only {extra:?}, oracle-only {missing:?}"));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn corpus_is_large_enough() {
    assert!(corpus().len() >= 20);
}

#[test]
fn without_stream_protocol_matches_free_choice() {
    compare(TranslationOptions::without_streams(), Valuation::Free);
}

#[test]
fn with_stream_protocol_matches_free_kinds() {
    compare(TranslationOptions::default(), Valuation::FreeKinds { order_consistency: false });
}

#[test]
fn with_order_consistency_matches_ordered_kinds() {
    compare(TranslationOptions::with_order_consistency(), Valuation::FreeKinds { order_consistency: true });
}

#[test]
fn languages_are_not_trivial() {
    let mut sizes = Vec::new();
    for (name, src) in corpus() {
        let c = parse_configuration(&src).unwrap();
        let n = enumerate_traces(&c.units[0], &Valuation::FreeKinds { order_consistency: false }, MAXLEN).unwrap();
        sizes.push((name, n.complete.len()));
    }
    assert!(sizes.iter().filter(|(_, k)| *k > 1).count() >= 15);
}
