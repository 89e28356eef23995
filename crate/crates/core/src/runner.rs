//! Equality-saturation loop, witness extraction, and the end-to-end
//! `analyze` pipeline.

use std::rc::Rc;
use std::time::{Duration, Instant};

use num_traits::ToPrimitive;

use crate::egraph::{ClassId, EGraph, ENode};
use crate::error::Result;
use crate::expr::{natural_extension, DomainEnv, Expr, Rational};
use crate::interval::{extend, meet, Interval, OpKind};
use crate::rules::{apply_rule, check_guard, ematch_limited, rule_set, Rule};

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub max_iterations: usize,
    pub max_nodes: usize,
    pub time_limit: Duration,
    /// Matches collected per rule per iteration.
    pub match_limit: usize,
    pub rules: Vec<Rule>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            max_iterations: 30,
            max_nodes: 50_000,
            time_limit: Duration::from_secs(10),
            match_limit: 10_000,
            rules: rule_set(),
        }
    }
}

impl RunConfig {
    pub fn with_rules(mut self, rules: Vec<Rule>) -> Self {
        self.rules = rules;
        self
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum StopReason {
    Saturated,
    IterationLimit,
    NodeLimit,
    TimeLimit,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Saturated => "saturated",
            StopReason::IterationLimit => "iter_limit",
            StopReason::NodeLimit => "node_limit",
            StopReason::TimeLimit => "time_limit",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [
            StopReason::Saturated,
            StopReason::IterationLimit,
            StopReason::NodeLimit,
            StopReason::TimeLimit,
        ]
        .into_iter()
        .find(|r| r.name() == s)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct RunStats {
    pub iterations: usize,
    pub classes: usize,
    pub nodes: usize,
    /// Successful rule applications, i.e. ones that changed the graph.
    pub applications: usize,
    pub wall_time: Duration,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Clone, PartialEq, Debug)]
pub struct Witness {
    pub expr: Expr,
    /// Natural extension of `expr`.
    pub interval: Interval,
    /// Whether `expr` alone attains the class bound on the requested side.
    /// When false the bound is meet-only and `expr` is the smallest member.
    pub attained: bool,
}

#[derive(Clone, PartialEq, Debug)]
pub struct Report {
    pub expr: Expr,
    pub initial: Interval,
    pub improved: Interval,
    /// `(width(improved) - width(initial)) / width(initial)`; `None` when the
    /// initial width is zero or infinite.
    pub width_change: Option<f64>,
    pub witness_lo: Witness,
    pub witness_hi: Witness,
    pub stop_reason: StopReason,
    pub stats: RunStats,
}

/// Computes the relative width change exactly from the float endpoints.
pub fn width_change(initial: &Interval, improved: &Interval) -> Option<f64> {
    let w0 = exact_width(initial)?;
    let w1 = exact_width(improved)?;
    if w0 == Rational::from_integer(0.into()) {
        return None;
    }
    ((w1 - &w0) / w0).to_f64()
}

fn exact_width(iv: &Interval) -> Option<Rational> {
    Some(Rational::from_float(iv.hi())? - Rational::from_float(iv.lo())?)
}

pub fn saturate(g: &mut EGraph, cfg: &RunConfig) -> Result<(StopReason, RunStats)> {
    saturate_observed(g, cfg, |_, _| {})
}

/// Like [`saturate`], calling `hook` with the rebuilt graph after every
/// iteration.
pub fn saturate_observed(
    g: &mut EGraph,
    cfg: &RunConfig,
    mut hook: impl FnMut(&EGraph, usize),
) -> Result<(StopReason, RunStats)> {
    let start = Instant::now();
    g.rebuild()?;
    let mut stats = RunStats::default();
    let reason = loop {
        if stats.iterations >= cfg.max_iterations {
            break StopReason::IterationLimit;
        }
        if start.elapsed() >= cfg.time_limit {
            break StopReason::TimeLimit;
        }
        if g.approx_node_count() >= cfg.max_nodes {
            break StopReason::NodeLimit;
        }
        let before = g.version();

        let mut matches = Vec::new();
        for (i, rule) in cfg.rules.iter().enumerate() {
            for m in ematch_limited(&rule.lhs, g, cfg.match_limit) {
                matches.push((i, m));
            }
        }

        let mut interrupted = None;
        for (n, (i, (subst, class))) in matches.into_iter().enumerate() {
            if g.approx_node_count() >= cfg.max_nodes {
                interrupted = Some(StopReason::NodeLimit);
                break;
            }
            if n % 1024 == 1023 && start.elapsed() >= cfg.time_limit {
                interrupted = Some(StopReason::TimeLimit);
                break;
            }
            let rule = &cfg.rules[i];
            if !check_guard(rule, &subst, g) {
                continue;
            }
            if apply_rule(rule, &subst, class, g)? {
                stats.applications += 1;
            }
        }
        g.rebuild()?;
        stats.iterations += 1;
        hook(g, stats.iterations);
        if let Some(reason) = interrupted {
            break reason;
        }
        if g.version() == before {
            break StopReason::Saturated;
        }
    };
    stats.classes = g.number_of_classes();
    stats.nodes = g.total_number_of_nodes();
    stats.wall_time = start.elapsed();
    Ok((reason, stats))
}

/// Builds the e-graph for `e`, saturates it and reports the root interval.
pub fn analyze(e: &Expr, env: &DomainEnv, cfg: &RunConfig) -> Result<Report> {
    analyze_with_graph(e, env, cfg).map(|(report, _, _)| report)
}

/// [`analyze`], also returning the saturated graph and its root class.
pub fn analyze_with_graph(
    e: &Expr,
    env: &DomainEnv,
    cfg: &RunConfig,
) -> Result<(Report, EGraph, ClassId)> {
    let start = Instant::now();
    let initial = natural_extension(e, env)?;
    let mut g = EGraph::new(env.clone());
    let root = g.add_expr(e)?;
    let (stop_reason, mut stats) = saturate(&mut g, cfg)?;
    let root = g.find(root);
    let improved = meet(&initial, &g.data(root))?;
    let table = WitnessTable::build(&g);
    let witness_lo = table.witness(&g, root, Side::Lower, improved);
    let witness_hi = table.witness(&g, root, Side::Upper, improved);
    stats.wall_time = start.elapsed();
    let report = Report {
        expr: e.clone(),
        initial,
        improved,
        width_change: width_change(&initial, &improved),
        witness_lo,
        witness_hi,
        stop_reason,
        stats,
    };
    Ok((report, g, root))
}

/// A represented expression of `c` whose natural extension attains the
/// class bound on `side`, or the smallest member flagged as meet-only.
pub fn extract_witness(g: &EGraph, c: ClassId, side: Side) -> Witness {
    let c = g.find(c);
    WitnessTable::build(g).witness(g, c, side, g.data(c))
}

enum Term {
    Leaf(ENode),
    Op(OpKind, Vec<Rc<Term>>),
}

impl Term {
    fn to_expr(&self) -> Expr {
        match self {
            Term::Leaf(ENode::Const(r)) => Expr::Const(r.clone()),
            Term::Leaf(ENode::Var(s)) => Expr::Var(s.clone()),
            Term::Leaf(ENode::Op(..)) => unreachable!("operator leaf"),
            Term::Op(op, kids) => Expr::Op(*op, kids.iter().map(|k| k.to_expr()).collect()),
        }
    }
}

#[derive(Clone)]
struct Candidate {
    term: Rc<Term>,
    interval: Interval,
    size: usize,
    head: &'static str,
}

const LO: usize = 0;
const HI: usize = 1;
const SMALL: usize = 2;
const MAX_ROUNDS: usize = 64;
const MAX_WITNESS_SIZE: usize = 400;

impl Candidate {
    fn key(&self) -> (usize, &'static str) {
        (self.size, self.head)
    }

    fn beats(&self, other: &Candidate, slot: usize) -> bool {
        let (a, b) = (self.interval, other.interval);
        match slot {
            LO if a.lo() != b.lo() => a.lo() > b.lo(),
            HI if a.hi() != b.hi() => a.hi() < b.hi(),
            _ => self.key() < other.key(),
        }
    }
}

/// Per-class best terms for the lower bound, the upper bound and size,
/// found by iterating node combinations to a fixpoint.
struct WitnessTable {
    slots: Vec<[Option<Candidate>; 3]>,
}

impl WitnessTable {
    fn build(g: &EGraph) -> Self {
        let mut slots: Vec<[Option<Candidate>; 3]> = vec![[None, None, None]; g.id_bound()];
        for _ in 0..MAX_ROUNDS {
            let mut changed = false;
            for class in g.classes() {
                for node in class.nodes() {
                    for cand in candidates(g, node, &slots) {
                        let entry = &mut slots[class.id().index()];
                        for slot in [LO, HI, SMALL] {
                            let better = match &entry[slot] {
                                None => true,
                                Some(cur) => cand.beats(cur, slot),
                            };
                            if better {
                                entry[slot] = Some(cand.clone());
                                changed = true;
                            }
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        WitnessTable { slots }
    }

    fn witness(&self, g: &EGraph, c: ClassId, side: Side, bound: Interval) -> Witness {
        let entry = &self.slots[g.find(c).index()];
        let (slot, attained): (usize, fn(&Interval, &Interval) -> bool) = match side {
            Side::Lower => (LO, |t, b| t.lo() >= b.lo()),
            Side::Upper => (HI, |t, b| t.hi() <= b.hi()),
        };
        let best = entry[slot].as_ref().expect("every class has a finite term");
        if attained(&best.interval, &bound) {
            return Witness {
                expr: best.term.to_expr(),
                interval: best.interval,
                attained: true,
            };
        }
        let small = entry[SMALL].as_ref().expect("every class has a finite term");
        Witness {
            expr: small.term.to_expr(),
            interval: small.interval,
            attained: false,
        }
    }
}

fn candidates(g: &EGraph, node: &ENode, slots: &[[Option<Candidate>; 3]]) -> Vec<Candidate> {
    match node {
        ENode::Const(_) | ENode::Var(_) => {
            let interval = g.node_interval(node);
            vec![Candidate {
                term: Rc::new(Term::Leaf(node.clone())),
                interval,
                size: 1,
                head: node.op().name(),
            }]
        }
        ENode::Op(op, kids) => {
            let options: Vec<Vec<&Candidate>> = kids
                .iter()
                .map(|&k| {
                    let mut v: Vec<&Candidate> = Vec::new();
                    for c in slots[g.find(k).index()].iter().flatten() {
                        if !v.iter().any(|seen| Rc::ptr_eq(&seen.term, &c.term)) {
                            v.push(c);
                        }
                    }
                    v
                })
                .collect();
            if options.iter().any(|o| o.is_empty()) {
                return Vec::new();
            }
            let mut out = Vec::new();
            let mut idx = vec![0usize; options.len()];
            loop {
                let chosen: Vec<&Candidate> =
                    idx.iter().zip(&options).map(|(&i, o)| o[i]).collect();
                let size = 1 + chosen.iter().map(|c| c.size).sum::<usize>();
                let args: Vec<Interval> = chosen.iter().map(|c| c.interval).collect();
                if size <= MAX_WITNESS_SIZE {
                    if let Ok(interval) = extend(*op, &args) {
                        out.push(Candidate {
                            term: Rc::new(Term::Op(
                                *op,
                                chosen.iter().map(|c| c.term.clone()).collect(),
                            )),
                            interval,
                            size,
                            head: op.name(),
                        });
                    }
                }
                // advance the mixed-radix counter
                let mut pos = 0;
                loop {
                    if pos == idx.len() {
                        return out;
                    }
                    idx[pos] += 1;
                    if idx[pos] < options[pos].len() {
                        break;
                    }
                    idx[pos] = 0;
                    pos += 1;
                }
            }
        }
    }
}
