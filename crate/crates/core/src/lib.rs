pub mod analysis;
pub mod cli;
pub mod dot;
pub mod egraph;
mod error;
mod sexp;
pub mod expr;
pub mod interval;
pub mod rules;
pub mod runner;

pub use analysis::{make, merge_data, modify, propagate, PropagateStats};
pub use egraph::{ClassId, EClass, EGraph, ENode};
pub use error::{Error, Result};
pub use expr::{
    eval_concrete, natural_extension, parse, sample_range, DomainEnv, Expr, Rational, Symbol,
};
pub use interval::{extend, meet, round_outward, width, Interval, OpKind};
pub use rules::{
    apply_rule, check_guard, ematch, load_manifest, parse_manifest, rule_set, Condition,
    ConditionKind, Pattern, Rule, Subst,
};
pub use runner::{
    analyze, analyze_with_graph, extract_witness, saturate, saturate_observed, width_change, Report, RunConfig,
    RunStats, Side, StopReason, Witness,
};
