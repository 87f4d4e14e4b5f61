//! Analyses over reachability graphs: deadlocks, linear place invariants and
//! CTL with a macro layer.

mod ctl;
mod deadlock;
mod formula;

pub use ctl::{check_ctl, CheckOptions, CmpOp, CtlFormula, CtlResult, StateAtom, Verdict};
pub use deadlock::{
    check_place_invariants, find_deadlocks, stream_invariants, DeadlockReport, InvariantReport, InvariantViolation,
    PlaceSum,
};
pub use formula::{expand_macros, MacroDef, MacroLibrary, Model, NamedFormula};

/// Version of the JSON reports.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("`{0}` is neither a macro nor a place")]
    UnknownMacro(String),
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("unknown port `{0}`")]
    UnknownPort(String),
    #[error("`{name}` takes {expected} argument(s), got {got}")]
    ArityMismatch { name: String, expected: usize, got: usize },
    #[error("recursive macro: {0}")]
    RecursiveMacro(String),
    #[error("{0}")]
    Expansion(String),
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("net has no final-marking predicate")]
    NoFinalPredicate,
    #[error("reachability graph is incomplete (truncated or reduced)")]
    TruncatedGraph,
}
