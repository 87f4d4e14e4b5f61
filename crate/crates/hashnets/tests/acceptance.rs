//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! The report goes straight to stdout, so plain `cargo test` shows it.
//! The test fails if any criterion outside `KNOWN_UNATTAINABLE` fails.

use hashnets::ahcl::{parse_configuration, parse_configuration_with, Component};
use hashnets::analyze::{
    check_ctl, check_place_invariants, expand_macros, find_deadlocks, stream_invariants, CheckOptions, MacroLibrary,
    Model, Verdict,
};
use hashnets::behavior::{enumerate_traces, stream_flatten, valid_successors, Action, Nested, StreamKind, Valuation};
use hashnets::interop::{export_pnml, import_pnml, isomorphic_by_id};
use hashnets::petri::{
    net_language, reachability_graph, reachability_graph_seq, reduced_reachability_graph, terminal_language,
    CompiledNet, FinalPredicate, InterlacedNet, Limits,
};
use hashnets::translate::{translate_component, TranslationOptions};
use rand::{Rng, SeedableRng};
use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

const ORACLE_MAXLEN: usize = 8;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const MIN_PROTOCOLS: usize = 20;
const DINING_CAP: usize = 2_000_000;
const DINING_BUDGET: Duration = Duration::from_secs(120);
const ABP_CAP: usize = 100_000;
const LANG_MAXLEN: usize = 8;
const RANDOM_NETS: u64 = 100;
const RANDOM_CAP: usize = 2_000;

/// Criteria that cannot pass as stated; see the README.
const KNOWN_UNATTAINABLE: &[u32] = &[6];

/// The published nested list and its printed kind sequence, nesting 4.
const PRINTED_TREE: &str = "[[[[1],[5,6]],[[2,3]]],[],[[[[4,5,7],[8,9]]],[[6],[7,9]]]]";
const PRINTED_SEQUENCE: &str =
    "1,EOS 3,5,6,EOS 3,EOS 1,2,3,EOS 3,EOS 2,EOS 1,EOS 1,4,5,7,EOS 3,8,9,EOS 3,EOS 2,EOS 1,6,EOS 3,7,9,EOS 3,EOS 2,EOS 1,EOS 0";

/// The printed list with one bracket level dropped where values sat too deep,
/// and the third element split in two.
const CLOSEST_TREE: &str = "[[[[1],[5,6]],[[2,3]]],[],[[[4,5,7],[8,9]]],[[[6],[7,9]]]]";

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read(rel: &str) -> String {
    std::fs::read_to_string(root().join(rel)).unwrap()
}

fn protocols() -> Vec<(String, Component)> {
    let mut v: Vec<_> = std::fs::read_dir(root().join("protocols"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "ahcl"))
        .map(|p| {
            let c = parse_configuration(&std::fs::read_to_string(&p).unwrap()).unwrap();
            (p.file_stem().unwrap().to_string_lossy().into_owned(), c)
        })
        .collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v
}

fn combinators(a: &Action, out: &mut BTreeSet<&'static str>) {
    out.insert(match a {
        Action::Skip => "skip",
        Action::Seq(_) => "seq",
        Action::Par(_) => "par",
        Action::Alt(_) => "alt",
        Action::RepeatUntil(..) => "repeat-until",
        Action::RepeatCounter(..) => "repeat-counter",
        Action::RepeatForever(_) => "repeat-forever",
        Action::If(..) => "if",
        Action::Signal(_) | Action::Wait(_) => "signal/wait",
        Action::Activate(..) => "activate",
        Action::Do(_) => "do",
    });
    for c in a.children() {
        combinators(c, out);
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let corpus = protocols();
    let mut covered = BTreeSet::new();
    for (_, c) in &corpus {
        combinators(&c.units[0].protocol.action, &mut covered);
    }
    let needed = ["skip", "seq", "par", "alt", "repeat-until", "repeat-counter", "repeat-forever", "if", "signal/wait"];
    let missing: Vec<_> = needed.iter().filter(|k| !covered.contains(*k)).collect();
    let settings = [
        (TranslationOptions::without_streams(), Valuation::Free),
        (TranslationOptions::default(), Valuation::FreeKinds { order_consistency: false }),
        (TranslationOptions::with_order_consistency(), Valuation::FreeKinds { order_consistency: true }),
    ];
    let mut mismatches = Vec::new();
    for (name, c) in &corpus {
        for (opt, val) in &settings {
            let net = translate_component(c, opt).unwrap().compile().unwrap();
            let g = reachability_graph(&net, Limits::states(500_000));
            let lang = terminal_language(&net, &g, ORACLE_MAXLEN).unwrap();
            let oracle = enumerate_traces(&c.units[0], val, ORACLE_MAXLEN).unwrap().complete;
            if lang.truncated || lang.words != oracle {
                mismatches.push(name.clone());
            }
        }
    }
    let took = start.elapsed();
    let pass = corpus.len() >= MIN_PROTOCOLS && missing.is_empty() && mismatches.is_empty() && took < ORACLE_BUDGET;
    outcome(
        pass,
        format!(
            "{} protocols x 3 settings, maxlen {ORACLE_MAXLEN}, {} mismatches, missing combinators {missing:?}, {:.1}s",
            corpus.len(),
            mismatches.len(),
            took.as_secs_f64()
        ),
    )
}

fn dining(file: &str, n: i64, opt: TranslationOptions) -> (Component, InterlacedNet) {
    let c = parse_configuration_with(&read(file), &[("N", n)]).unwrap();
    let net = translate_component(&c, &opt).unwrap();
    (c, net)
}

fn formulas(
    c: &Component,
    net: &InterlacedNet,
    n: i64,
    files: &[&str],
) -> Vec<(String, hashnets::analyze::CtlFormula)> {
    let mut lib = MacroLibrary::with_constants(&[("N", n)]);
    for f in files {
        lib.add_file(&read(f)).unwrap();
    }
    lib.expand_all(Model { component: Some(c), net }).unwrap().into_iter().map(|(name, _, f)| (name, f)).collect()
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (c, net) = dining("components/dining_a.ahcl", 5, TranslationOptions::without_streams());
    let compiled = net.compile().unwrap();
    // stubborn sets keep every dead marking; the full graph exceeds the cap
    let g = reduced_reachability_graph(&compiled, Limits::states(DINING_CAP));
    let d = find_deadlocks(&compiled, &g);
    let fs = formulas(&c, &net, 5, &["components/phil_macros.ctl", "components/deadlock.ctl"]);
    let r = check_ctl(&compiled, &g, &fs[0].1, CheckOptions::default()).unwrap();
    let took = start.elapsed();
    let pass = !d.is_empty() && !g.truncated && r.verdict == Verdict::True && took < DINING_BUDGET;
    outcome(
        pass,
        format!(
            "reduced graph {} states (cap {DINING_CAP}, truncated {}), {} deadlocks, deadlock formula {:?} with {}-step witness, {:.1}s",
            g.len(),
            g.truncated,
            d.dead.len(),
            r.verdict,
            r.path.as_ref().map_or(0, Vec::len),
            took.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [4, 5] {
        let start = Instant::now();
        let (c, net) = dining("components/dining_b.ahcl", n, TranslationOptions::default());
        let compiled = net.compile().unwrap();
        let g = reachability_graph(&compiled, Limits::states(DINING_CAP));
        let d = find_deadlocks(&compiled, &g);
        let fs = formulas(&c, &net, n, &["components/phil_macros.ctl", "components/dining.ctl"]);
        let verdict = |name: &str| {
            let f = &fs.iter().find(|x| x.0 == name).unwrap().1;
            check_ctl(&compiled, &g, f, CheckOptions { strict: true }).unwrap().verdict
        };
        let mutex = verdict("mutual_exclusion");
        let two = verdict("two_eating");
        let took = start.elapsed();
        pass &= !g.truncated && d.is_empty() && mutex == Verdict::False && took < DINING_BUDGET;
        parts.push(format!(
            "N={n}: {} states, {} deadlocks, mutual_exclusion {mutex:?}, two_eating {two:?} (informational), {:.1}s",
            g.len(),
            d.dead.len(),
            took.as_secs_f64()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_4() -> Outcome {
    let c = parse_configuration(&read("components/ready_misuse.ahcl")).unwrap();
    let net = translate_component(&c, &TranslationOptions::default()).unwrap();
    let compiled = net.compile().unwrap();
    let g = reachability_graph(&compiled, Limits::default());
    let d = find_deadlocks(&compiled, &g);
    let lib = MacroLibrary::new();
    let model = Model { component: Some(&c), net: &net };
    let blocked = expand_macros("AG (deadlock & !final -> sender_blocked[link])", &lib, model).unwrap();
    let r = check_ctl(&compiled, &g, &blocked, CheckOptions { strict: true }).unwrap();
    let pass = d.dead.len() == 1 && r.verdict == Verdict::True;
    outcome(pass, format!("{} non-final dead marking(s), sender blocked in all: {:?}", d.dead.len(), r.verdict))
}

fn criterion_5() -> Outcome {
    let c = parse_configuration(&read("components/abp_reduced.ahcl")).unwrap();
    let net = translate_component(&c, &TranslationOptions::with_order_consistency()).unwrap();
    let compiled = net.compile().unwrap();
    let g = reachability_graph(&compiled, Limits::states(ABP_CAP));
    let sums = stream_invariants(&net);
    let r = check_place_invariants(&compiled, &g, &sums).unwrap();
    let pass = r.holds() && !sums.is_empty();
    outcome(
        pass,
        format!(
            "{} sums over {} states (truncated {}), violations {}",
            r.sums,
            r.states,
            r.truncated,
            usize::from(r.violation.is_some())
        ),
    )
}

fn printed_kinds() -> Vec<StreamKind> {
    PRINTED_SEQUENCE
        .split(',')
        .map(|t| match t.strip_prefix("EOS ") {
            Some(k) => StreamKind::Eos(k.parse().unwrap()),
            None => StreamKind::Data,
        })
        .collect()
}

fn criterion_6() -> Outcome {
    let expected = printed_kinds();
    let tree: Nested = PRINTED_TREE.parse().unwrap();
    let got = stream_flatten(&tree, 4);
    // the printed sequence itself breaks the successor rule
    let bad_step = expected.windows(2).position(|w| !valid_successors(w[0], 4).contains(&w[1]));
    let pass = got.as_ref().is_ok_and(|k| *k == expected);
    let closest = stream_flatten(&CLOSEST_TREE.parse().unwrap(), 4).unwrap();
    let differ: Vec<usize> =
        (0..expected.len().max(closest.len())).filter(|&i| expected.get(i) != closest.get(i)).collect();
    let got_text = match &got {
        Ok(k) => format!("{} kinds", k.len()),
        Err(e) => format!("error: {e}"),
    };
    outcome(
        pass,
        format!(
            "printed list flattens to {got_text}; printed sequence has {} kinds and an invalid step at index {}; \
             the closest valid list gives {} kinds differing at {differ:?}",
            expected.len(),
            bad_step.map_or("none".into(), |i| (i + 1).to_string()),
            closest.len()
        ),
    )
}

fn criterion_7() -> Outcome {
    let lang = |file: &str| {
        let c = parse_configuration(&read(file)).unwrap();
        let net = translate_component(&c, &TranslationOptions::default()).unwrap().compile().unwrap();
        let g = reachability_graph(&net, Limits::default());
        (terminal_language(&net, &g, LANG_MAXLEN).unwrap(), net_language(&net, &g, LANG_MAXLEN))
    };
    let (counter, _) = lang("components/counter3.ahcl");
    let aaa = BTreeSet::from([vec!["a!".to_string(); 3]]);
    let (forever, prefixes) = lang("components/forever.ahcl");
    let expected_prefixes: BTreeSet<Vec<String>> = (0..=LANG_MAXLEN).map(|k| vec!["a!".to_string(); k]).collect();
    let closed = prefixes.words.iter().all(|w| w.is_empty() || prefixes.words.contains(&w[..w.len() - 1]));
    let pass = counter.words == aaa && forever.words.is_empty() && closed && prefixes.words == expected_prefixes;
    outcome(
        pass,
        format!(
            "counter 3: {} word(s), {{a^3}} {}; forever: {} terminal words, {} prefixes up to {LANG_MAXLEN}, prefix-closed {closed}",
            counter.words.len(),
            counter.words == aaa,
            forever.words.len(),
            prefixes.words.len()
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut nets: Vec<(String, InterlacedNet)> = Vec::new();
    for (name, c) in protocols() {
        nets.push((name, translate_component(&c, &TranslationOptions::with_order_consistency()).unwrap()));
    }
    for f in ["dining_a", "dining_b", "ready_misuse", "abp_reduced", "counter3", "forever"] {
        let c = parse_configuration(&read(&format!("components/{f}.ahcl"))).unwrap();
        for (tag, opt) in [
            ("plain", TranslationOptions::without_streams()),
            ("streams", TranslationOptions::default()),
            ("oc", TranslationOptions::with_order_consistency()),
        ] {
            nets.push((format!("{f}/{tag}"), translate_component(&c, &opt).unwrap()));
        }
    }
    let failures: Vec<String> = nets
        .iter()
        .filter_map(|(name, n)| {
            let back = import_pnml(&export_pnml(n).ok()?).map_err(|e| e.to_string());
            match back.and_then(|b| isomorphic_by_id(n, &b)) {
                Ok(()) => None,
                Err(e) => Some(format!("{name}: {e}")),
            }
        })
        .collect();
    outcome(
        failures.is_empty(),
        format!("{} nets, {} not isomorphic after round trip {failures:?}", nets.len(), failures.len()),
    )
}

fn random_net(rng: &mut impl Rng) -> InterlacedNet {
    let np = rng.gen_range(1..=6);
    let nt = rng.gen_range(1..=6);
    let mut n = InterlacedNet::new();
    for p in 0..np {
        n.place(format!("p{p}"), []);
        let k = rng.gen_range(0..3);
        if k > 0 {
            n.mark(&format!("p{p}"), k);
        }
    }
    for t in 0..nt {
        let id = format!("t{t}");
        n.transition(&id, Some(format!("l{}", rng.gen_range(0..3))), []);
        for _ in 0..rng.gen_range(0..3) {
            n.arc_in(&format!("p{}", rng.gen_range(0..np)), &id, rng.gen_range(1..3));
        }
        for _ in 0..rng.gen_range(0..3) {
            n.arc_out(&id, &format!("p{}", rng.gen_range(0..np)), rng.gen_range(1..3));
        }
    }
    n.final_predicate = Some(FinalPredicate::at_least("p0", 1));
    n
}

fn token_game_holds(net: &CompiledNet) -> bool {
    let g = reachability_graph(net, Limits::states(RANDOM_CAP));
    if g != reachability_graph_seq(net, Limits::states(RANDOM_CAP)) {
        return false;
    }
    (0..g.len()).all(|i| {
        let m = g.marking(i);
        let enabled: BTreeSet<usize> = net.enabled_transitions(&m).collect();
        let fired: BTreeSet<usize> = g.successors(i).iter().map(|e| e.0 as usize).collect();
        (!g.is_expanded(i) || enabled == fired)
            && g.successors(i).iter().all(|&(t, v)| {
                let t = t as usize;
                let after = g.marking(v as usize);
                net.pre[t].iter().all(|&(p, w)| m.get(p) >= w)
                    && (0..net.places.len()).all(|p| {
                        let take: u32 = net.pre[t].iter().filter(|x| x.0 == p).map(|x| x.1).sum();
                        let give: u32 = net.post[t].iter().filter(|x| x.0 == p).map(|x| x.1).sum();
                        after.get(p) == m.get(p) - take + give
                    })
            })
    })
}

fn criterion_9() -> Outcome {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let failed = (0..RANDOM_NETS).filter(|_| !token_game_holds(&random_net(&mut rng).compile().unwrap())).count();
    outcome(failed == 0, format!("{RANDOM_NETS} random nets, {failed} failing"))
}

#[test]
fn acceptance() {
    let criteria: [(u32, &str, fn() -> Outcome); 9] = [
        (1, "oracle equivalence", criterion_1),
        (2, "dining (a) deadlock", criterion_2),
        (3, "dining (b) deadlock freedom and mutual exclusion", criterion_3),
        (4, "ready channel misuse", criterion_4),
        (5, "stream protocol invariants", criterion_5),
        (6, "stream flattening of the printed list", criterion_6),
        (7, "bounded repetition", criterion_7),
        (8, "PNML round trip", criterion_8),
        (9, "token game", criterion_9),
    ];
    let mut unexpected = Vec::new();
    for (k, name, run) in criteria {
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let known = if !o.pass && KNOWN_UNATTAINABLE.contains(&k) { " [known unattainable]" } else { "" };
        // written past the test harness capture so the report always shows
        let line = format!("{tag} {k}. {name}: {}{known}\n", o.detail);
        std::io::stdout().write_all(line.as_bytes()).unwrap();
        if !o.pass && known.is_empty() {
            unexpected.push(k);
        }
    }
    assert!(unexpected.is_empty(), "failing criteria: {unexpected:?}");
}
