//! `hashnets`: translate AHCL configurations to Petri nets and analyse them.
//!
//! Exit status: 0 when the requested output or verdicts were produced,
//! 1 for diagnostics (bad input, usage errors), 2 for internal errors.

use clap::{Args, Parser, Subcommand, ValueEnum};
use hashnets::ahcl::{parse_configuration_with, pretty_print, validate_configuration, Component, Severity};
use hashnets::analyze::{check_ctl, find_deadlocks, CheckOptions, CtlFormula, MacroLibrary, Model, Verdict};
use hashnets::behavior::{enumerate_traces, Valuation};
use hashnets::interop::{export_pnml, import_pnml, json_report, net_to_dot, reach_to_dot};
use hashnets::petri::{
    reachability_graph, reduced_reachability_graph, terminal_language, CompiledNet, InterlacedNet, Limits, ReachGraph,
    Word,
};
use hashnets::translate::{translate_component, TranslationOptions};
use serde::Serialize;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hashnets", version, about = "Hash configurations as interlaced Petri nets")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate a configuration, print it back in canonical form.
    Parse {
        file: PathBuf,
        #[arg(long = "param", value_name = "NAME=INT", value_parser = param)]
        params: Vec<(String, i64)>,
    },
    /// Translate to an interlaced Petri net (PNML or DOT).
    Translate {
        #[command(flatten)]
        net: NetArgs,
        /// Output file; the format follows the extension. Stdout if omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Explore the reachability graph and print its statistics.
    Reach {
        #[command(flatten)]
        net: NetArgs,
        #[command(flatten)]
        explore: ExploreArgs,
        #[arg(long)]
        json: bool,
        /// Also write the graph as DOT.
        #[arg(long, value_name = "FILE")]
        dot: Option<PathBuf>,
    },
    /// List dead markings that are not proper terminations.
    Deadlocks {
        #[command(flatten)]
        net: NetArgs,
        #[command(flatten)]
        explore: ExploreArgs,
        #[arg(long)]
        json: bool,
        /// Witness paths to print.
        #[arg(long, default_value_t = 1)]
        witnesses: usize,
    },
    /// Model-check the formulas of one or more formula files.
    Check {
        #[command(flatten)]
        net: NetArgs,
        #[command(flatten)]
        explore: ExploreArgs,
        /// Formula file; repeat to load macro libraries first.
        #[arg(long = "formulas", required = true)]
        formulas: Vec<PathBuf>,
        /// Fail instead of answering `unknown` on incomplete graphs.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        json: bool,
    },
    /// Terminal language up to a length, optionally against the trace oracle.
    Lang {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        #[arg(long, env = "HASHNETS_MAX_STATES", default_value_t = 2_000_000)]
        max_states: usize,
        #[arg(long)]
        oracle: bool,
    },
}

#[derive(Args)]
struct NetArgs {
    /// `.ahcl` configuration or `.pnml` net.
    file: PathBuf,
    /// Include the stream synchronization protocol (default).
    #[arg(long, overrides_with = "no_streams")]
    streams: bool,
    #[arg(long)]
    no_streams: bool,
    #[arg(long)]
    order_consistency: bool,
    /// Overrides a component parameter and the formula constant of the same name.
    #[arg(long = "param", value_name = "NAME=INT", value_parser = param)]
    params: Vec<(String, i64)>,
}

#[derive(Args)]
struct ExploreArgs {
    #[arg(long, env = "HASHNETS_MAX_STATES", default_value_t = 2_000_000)]
    max_states: usize,
    /// Explore with deadlock-preserving stubborn sets.
    #[arg(long)]
    reduce: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Pnml,
    Dot,
}

fn param(s: &str) -> Result<(String, i64), String> {
    let (k, v) = s.split_once('=').ok_or("expected NAME=INT")?;
    let v = v.trim().parse().map_err(|_| format!("`{v}` is not an integer"))?;
    Ok((k.trim().to_string(), v))
}

enum Failure {
    Diagnostic(String),
    Internal(String),
}

type Outcome = Result<(), Failure>;

fn diag(m: impl std::fmt::Display) -> Failure {
    Failure::Diagnostic(m.to_string())
}

fn internal(m: impl std::fmt::Display) -> Failure {
    Failure::Internal(m.to_string())
}

struct Loaded {
    component: Option<Component>,
    net: InterlacedNet,
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| diag(format!("{}: {e}", path.display())))
}

fn load_component(path: &Path, params: &[(String, i64)]) -> Result<Component, Failure> {
    let text = read(path)?;
    let ov: Vec<(&str, i64)> = params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let file = path.display().to_string();
    let c = parse_configuration_with(&text, &ov)
        .map_err(|e| diag(format!("{file}:{}:{}: error: {e}", e.line, e.column)))?;
    let report = validate_configuration(&c);
    let mut errors = Vec::new();
    for d in &report.diagnostics {
        let line = d.render(&file, &text);
        match d.severity {
            Severity::Warning => eprintln!("{line}"),
            Severity::Error => errors.push(line),
        }
    }
    if !errors.is_empty() {
        return Err(diag(errors.join("\n")));
    }
    Ok(c)
}

impl NetArgs {
    fn options(&self) -> TranslationOptions {
        TranslationOptions {
            with_stream_protocol: !self.no_streams,
            with_order_consistency: self.order_consistency,
            ..Default::default()
        }
    }

    fn load(&self) -> Result<Loaded, Failure> {
        if self.file.extension().is_some_and(|e| e == "pnml") {
            let net = import_pnml(&read(&self.file)?).map_err(|e| diag(format!("{}: {e}", self.file.display())))?;
            return Ok(Loaded { component: None, net });
        }
        let c = load_component(&self.file, &self.params)?;
        let net = translate_component(&c, &self.options()).map_err(diag)?;
        Ok(Loaded { component: Some(c), net })
    }
}

fn compile(net: &InterlacedNet) -> Result<CompiledNet, Failure> {
    net.compile().map_err(internal)
}

fn explore(net: &CompiledNet, a: &ExploreArgs) -> ReachGraph {
    let limits = Limits::states(a.max_states);
    if a.reduce {
        reduced_reachability_graph(net, limits)
    } else {
        reachability_graph(net, limits)
    }
}

fn incomplete_note(g: &ReachGraph) {
    if g.truncated {
        eprintln!("note: exploration stopped at {} states; results cover the explored part only", g.len());
    }
    if g.reduced {
        eprintln!("note: reduced graph; it keeps every dead marking but not every path");
    }
}

fn print_json(v: &serde_json::Value) -> Outcome {
    println!("{}", serde_json::to_string_pretty(v).map_err(internal)?);
    Ok(())
}

fn write_out(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| internal(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_parse(file: &Path, params: &[(String, i64)]) -> Outcome {
    let c = load_component(file, params)?;
    print!("{}", pretty_print(&c));
    Ok(())
}

fn cmd_translate(net: &NetArgs, output: Option<&Path>, format: Option<Format>) -> Outcome {
    let loaded = net.load()?;
    let format = format.unwrap_or(match output.and_then(|p| p.extension()) {
        Some(e) if e == "dot" => Format::Dot,
        _ => Format::Pnml,
    });
    let text = match format {
        Format::Pnml => export_pnml(&loaded.net).map_err(internal)?,
        Format::Dot => net_to_dot(&loaded.net),
    };
    write_out(output, &text)
}

#[derive(Serialize)]
struct ReachReport {
    places: usize,
    transitions: usize,
    states: usize,
    edges: usize,
    depth: usize,
    peak_frontier: usize,
    dead: usize,
    truncated: bool,
    reduced: bool,
}

fn cmd_reach(net: &NetArgs, ex: &ExploreArgs, json: bool, dot: Option<&Path>) -> Outcome {
    let loaded = net.load()?;
    let c = compile(&loaded.net)?;
    let g = explore(&c, ex);
    let dead = (0..g.len()).filter(|&n| g.is_expanded(n) && g.successors(n).is_empty()).count();
    let r = ReachReport {
        places: c.places.len(),
        transitions: c.transitions.len(),
        states: g.stats.states,
        edges: g.stats.edges,
        depth: g.stats.depth,
        peak_frontier: g.stats.peak_frontier,
        dead,
        truncated: g.truncated,
        reduced: g.reduced,
    };
    if let Some(p) = dot {
        write_out(Some(p), &reach_to_dot(&c, &g))?;
    }
    if json {
        return print_json(&json_report("reach", &r));
    }
    incomplete_note(&g);
    println!("places: {}\ntransitions: {}", r.places, r.transitions);
    println!("states: {}\nedges: {}\ndepth: {}", r.states, r.edges, r.depth);
    println!("dead markings: {}", r.dead);
    println!("truncated: {}", r.truncated);
    Ok(())
}

#[derive(Serialize)]
struct DeadlockJson {
    states: usize,
    deadlocks: usize,
    terminated: usize,
    verdict: Verdict,
    truncated: bool,
    reduced: bool,
    witnesses: Vec<Vec<String>>,
}

fn cmd_deadlocks(net: &NetArgs, ex: &ExploreArgs, json: bool, witnesses: usize) -> Outcome {
    let loaded = net.load()?;
    let c = compile(&loaded.net)?;
    let g = explore(&c, ex);
    let r = find_deadlocks(&c, &g);
    // a dead marking found is a real one; absence needs the full graph
    let verdict = if !r.is_empty() {
        Verdict::True
    } else if g.truncated {
        Verdict::Unknown
    } else {
        Verdict::False
    };
    let paths: Vec<Vec<String>> = (0..r.dead.len().min(witnesses)).map(|k| r.witness(&c, &g, k)).collect();
    if json {
        let body = DeadlockJson {
            states: r.states,
            deadlocks: r.dead.len(),
            terminated: r.terminated,
            verdict,
            truncated: g.truncated,
            reduced: g.reduced,
            witnesses: paths,
        };
        return print_json(&json_report("deadlocks", &body));
    }
    incomplete_note(&g);
    println!("states: {}", r.states);
    println!("deadlocks: {}", r.dead.len());
    println!("terminated: {}", r.terminated);
    println!("deadlock reachable: {}", verdict_text(verdict));
    for p in paths {
        println!("witness ({} steps): {}", p.len(), p.join(" "));
    }
    Ok(())
}

fn verdict_text(v: Verdict) -> &'static str {
    match v {
        Verdict::True => "true",
        Verdict::False => "false",
        Verdict::Unknown => "unknown",
    }
}

fn has_universal_eventuality(f: &CtlFormula) -> bool {
    use CtlFormula::*;
    match f {
        Af(_) | Au(_, _) => true,
        Const(_) | Atom(_) => false,
        Not(g) | Ex(g) | Ax(g) | Ef(g) | Eg(g) | Ag(g) => has_universal_eventuality(g),
        And(fs) | Or(fs) => fs.iter().any(has_universal_eventuality),
        Implies(a, b) | Eu(a, b) => has_universal_eventuality(a) || has_universal_eventuality(b),
    }
}

#[derive(Serialize)]
struct FormulaJson {
    formula: String,
    text: String,
    verdict: Verdict,
    path: Option<Vec<String>>,
    loop_start: Option<usize>,
    fairness: Option<&'static str>,
}

#[derive(Serialize)]
struct CheckJson {
    states: usize,
    truncated: bool,
    reduced: bool,
    results: Vec<FormulaJson>,
}

fn cmd_check(net: &NetArgs, ex: &ExploreArgs, files: &[PathBuf], strict: bool, json: bool) -> Outcome {
    let loaded = net.load()?;
    let fixed: Vec<(&str, i64)> = net.params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let mut lib = MacroLibrary::with_constants(&fixed);
    for f in files {
        lib.add_file(&read(f)?).map_err(|e| diag(format!("{}: {e}", f.display())))?;
    }
    let model = Model { component: loaded.component.as_ref(), net: &loaded.net };
    let formulas = lib.expand_all(model).map_err(diag)?;
    if formulas.is_empty() {
        return Err(diag("no formulas to check"));
    }
    let c = compile(&loaded.net)?;
    let g = explore(&c, ex);
    let mut results = Vec::new();
    for (name, text, f) in &formulas {
        let r = check_ctl(&c, &g, f, CheckOptions { strict }).map_err(diag)?;
        results.push(FormulaJson {
            formula: name.clone(),
            text: text.clone(),
            verdict: r.verdict,
            path: r.path,
            loop_start: r.loop_start,
            fairness: has_universal_eventuality(f).then_some("none"),
        });
    }
    if json {
        let body = CheckJson { states: g.len(), truncated: g.truncated, reduced: g.reduced, results };
        return print_json(&json_report("check", &body));
    }
    incomplete_note(&g);
    for r in results {
        let caveat = if r.fairness.is_some() { " (no fairness assumption)" } else { "" };
        println!("{}: {}{caveat}", r.formula, verdict_text(r.verdict));
        if let Some(p) = r.path {
            let lasso = r.loop_start.map(|k| format!(", loop from step {k}")).unwrap_or_default();
            println!("  path ({} steps{lasso}): {}", p.len(), p.join(" "));
        }
    }
    Ok(())
}

/// Words as label strings. Polarity marks are dropped when no port occurs
/// with both; single-character labels are then run together (`aaa`), longer
/// ones separated by dots.
fn spell(words: &BTreeSet<Word>) -> String {
    let labels: BTreeSet<&String> = words.iter().flatten().collect();
    let bare = |l: &str| l.strip_suffix(['!', '?']).unwrap_or(l).to_string();
    let stripped: BTreeSet<String> = labels.iter().map(|l| bare(l)).collect();
    let strip = stripped.len() == labels.len();
    let shown = |l: &String| if strip { bare(l) } else { l.clone() };
    let short = labels.iter().all(|l| shown(l).chars().count() == 1);
    let w: Vec<String> = words
        .iter()
        .map(|w| {
            if w.is_empty() {
                "ε".to_string()
            } else {
                w.iter().map(shown).collect::<Vec<_>>().join(if short { "" } else { "." })
            }
        })
        .collect();
    format!("{{{}}}", w.join(", "))
}

fn cmd_lang(net: &NetArgs, max_len: usize, max_states: usize, oracle: bool) -> Outcome {
    let loaded = net.load()?;
    let c = compile(&loaded.net)?;
    let g = reachability_graph(&c, Limits::states(max_states));
    let lang = terminal_language(&c, &g, max_len).map_err(diag)?;
    if lang.truncated {
        eprintln!("note: exploration stopped at {} states; the language may be incomplete", g.len());
    }
    if !oracle {
        println!("{}", spell(&lang.words));
        return Ok(());
    }
    let comp = loaded.component.as_ref().ok_or_else(|| diag("--oracle needs an AHCL configuration"))?;
    let [unit] = comp.units.as_slice() else {
        return Err(diag("--oracle compares single-unit configurations"));
    };
    let opt = net.options();
    let valuation = if opt.with_stream_protocol {
        Valuation::FreeKinds { order_consistency: opt.with_order_consistency }
    } else {
        Valuation::Free
    };
    let expected = enumerate_traces(unit, &valuation, max_len).map_err(diag)?.complete;
    if lang.words == expected {
        println!("EQUAL {}", spell(&lang.words));
    } else {
        let net_only: BTreeSet<Word> = lang.words.difference(&expected).cloned().collect();
        let oracle_only: BTreeSet<Word> = expected.difference(&lang.words).cloned().collect();
        println!("DIFFERENT net-only {} oracle-only {}", spell(&net_only), spell(&oracle_only));
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match &cli.cmd {
        Cmd::Parse { file, params } => cmd_parse(file, params),
        Cmd::Translate { net, output, format } => cmd_translate(net, output.as_deref(), *format),
        Cmd::Reach { net, explore, json, dot } => cmd_reach(net, explore, *json, dot.as_deref()),
        Cmd::Deadlocks { net, explore, json, witnesses } => cmd_deadlocks(net, explore, *json, *witnesses),
        Cmd::Check { net, explore, formulas, strict, json } => cmd_check(net, explore, formulas, *strict, *json),
        Cmd::Lang { net, max_len, max_states, oracle } => cmd_lang(net, *max_len, *max_states, *oracle),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::Diagnostic(m))) => {
            eprintln!("{m}");
            ExitCode::from(1)
        }
        Ok(Err(Failure::Internal(m))) => {
            eprintln!("internal error: {m}");
            ExitCode::from(2)
        }
        Err(_) => ExitCode::from(2),
    }
}
