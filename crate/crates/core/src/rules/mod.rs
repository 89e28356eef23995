//! Rewrite rules: the manifest format, interval guards, and rule
//! application.
//!
//! A manifest holds one rule per line:
//!
//! ```text
//! name: lhs => rhs [if (cond pattern)...]
//! ```
//!
//! where `cond` is `nonzero` (0 not in the interval), `nonneg` (lower bound
//! at least 0) or `pos` (lower bound above 0). Condition patterns are
//! evaluated over the current class intervals of the matched classes, so a
//! guard that fails now may pass after further narrowing. `#` starts a
//! comment.

mod pattern;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

pub use pattern::{ematch, Pattern, Subst};
pub(crate) use pattern::{ematch_limited, instantiate, pattern_interval};

use crate::egraph::{ClassId, EGraph};
use crate::error::{Error, Result};
use crate::sexp::{self, Sexp};

/// The built-in catalog, in application order.
pub const DEFAULT_MANIFEST: &str = include_str!("../../rules/default.rules");

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum ConditionKind {
    Nonzero,
    Nonneg,
    Pos,
}

impl ConditionKind {
    pub fn name(self) -> &'static str {
        match self {
            ConditionKind::Nonzero => "nonzero",
            ConditionKind::Nonneg => "nonneg",
            ConditionKind::Pos => "pos",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        match s {
            "nonzero" => Some(ConditionKind::Nonzero),
            "nonneg" => Some(ConditionKind::Nonneg),
            "pos" => Some(ConditionKind::Pos),
            _ => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Condition {
    pub kind: ConditionKind,
    pub pattern: Pattern,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {})", self.kind.name(), self.pattern)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Rule {
    pub name: String,
    pub lhs: Pattern,
    pub rhs: Pattern,
    /// Conjunction of interval conditions; empty means unconditional.
    pub guard: Vec<Condition>,
}

impl Rule {
    pub fn new(name: &str, lhs: &str, rhs: &str) -> Result<Rule> {
        parse_rule_line(&format!("{name}: {lhs} => {rhs}"), 1)
    }

    pub fn is_guarded(&self) -> bool {
        !self.guard.is_empty()
    }

    fn validate(&self, line: usize) -> Result<()> {
        let err = |msg: String| Error::Manifest { line, msg };
        if !matches!(self.lhs, Pattern::Op(..)) {
            return Err(err(format!(
                "rule `{}`: left side must be an operator application",
                self.name
            )));
        }
        let bound = self.lhs.vars();
        let mut used: BTreeSet<_> = self.rhs.vars();
        for c in &self.guard {
            used.extend(c.pattern.vars());
        }
        if let Some(v) = used.difference(&bound).next() {
            return Err(err(format!(
                "rule `{}`: variable {v} is not bound by the left side",
                self.name
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} => {}", self.name, self.lhs, self.rhs)?;
        if !self.guard.is_empty() {
            write!(f, " if")?;
            for c in &self.guard {
                write!(f, " {c}")?;
            }
        }
        Ok(())
    }
}

/// The default rule catalog.
pub fn rule_set() -> Vec<Rule> {
    parse_manifest(DEFAULT_MANIFEST).expect("embedded rule manifest is valid")
}

pub fn load_manifest(path: &Path) -> Result<Vec<Rule>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_manifest(&text)
}

pub fn parse_manifest(text: &str) -> Result<Vec<Rule>> {
    let mut rules: Vec<Rule> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let rule = parse_rule_line(line, i + 1)?;
        if rules.iter().any(|r| r.name == rule.name) {
            return Err(Error::Manifest {
                line: i + 1,
                msg: format!("duplicate rule name `{}`", rule.name),
            });
        }
        rules.push(rule);
    }
    Ok(rules)
}

fn atom(s: &Sexp) -> Option<&str> {
    match s {
        Sexp::Atom { text, .. } => Some(text.as_str()),
        _ => None,
    }
}

fn parse_rule_line(line: &str, lineno: usize) -> Result<Rule> {
    let err = |msg: String| Error::Manifest { line: lineno, msg };
    let (name, body) = line
        .split_once(':')
        .ok_or_else(|| err("expected `name: lhs => rhs`".into()))?;
    let name = name.trim();
    if name.is_empty()
        || !name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
    {
        return Err(err(format!("invalid rule name `{name}`")));
    }
    let items = sexp::read_all(body).map_err(|e| err(e.to_string()))?;
    if items.len() < 3 || atom(&items[1]) != Some("=>") {
        return Err(err("expected `lhs => rhs`".into()));
    }
    let lhs = Pattern::from_sexp(&items[0]).map_err(|e| err(e.to_string()))?;
    let rhs = Pattern::from_sexp(&items[2]).map_err(|e| err(e.to_string()))?;
    let mut guard = Vec::new();
    if items.len() > 3 {
        if atom(&items[3]) != Some("if") || items.len() == 4 {
            return Err(err("expected `if` followed by conditions".into()));
        }
        for c in &items[4..] {
            let Sexp::List { items: parts, .. } = c else {
                return Err(err("condition must be `(kind pattern)`".into()));
            };
            let kind = match parts.as_slice() {
                [head, _] => atom(head).and_then(ConditionKind::from_name),
                _ => None,
            }
            .ok_or_else(|| err("condition must be `(nonzero|nonneg|pos pattern)`".into()))?;
            let pattern = Pattern::from_sexp(&parts[1]).map_err(|e| err(e.to_string()))?;
            guard.push(Condition { kind, pattern });
        }
    }
    let rule = Rule {
        name: name.to_string(),
        lhs,
        rhs,
        guard,
    };
    rule.validate(lineno)?;
    Ok(rule)
}

/// Evaluates the rule's guard over the current class intervals. Conditions
/// whose interval cannot be computed count as false.
pub fn check_guard(rule: &Rule, subst: &Subst, g: &EGraph) -> bool {
    rule.guard.iter().all(|c| {
        let Some(iv) = pattern_interval(&c.pattern, subst, g) else {
            return false;
        };
        match c.kind {
            ConditionKind::Nonzero => !iv.contains_zero(),
            ConditionKind::Nonneg => iv.lo() >= 0.0,
            ConditionKind::Pos => iv.lo() > 0.0,
        }
    })
}

/// Adds the right side under `subst` and unions it with `target`. Returns
/// whether the graph changed.
pub fn apply_rule(rule: &Rule, subst: &Subst, target: ClassId, g: &mut EGraph) -> Result<bool> {
    let before = g.version();
    let rhs = instantiate(&rule.rhs, subst, g);
    g.union(target, rhs).map_err(|e| e.with_rule(&rule.name))?;
    Ok(g.version() != before)
}
