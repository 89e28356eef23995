use std::collections::BTreeSet;
use std::fmt;

use smallvec::SmallVec;

use crate::egraph::{ClassId, EGraph, ENode};
use crate::error::{Error, Result};
use crate::expr::{format_rational, is_identifier, parse_head, parse_rational, Rational, Symbol};
use crate::interval::{extend, meet, round_outward, Interval, OpKind};
use crate::sexp::Sexp;

/// A term with pattern variables (`?x`) at some leaves.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Pattern {
    /// Pattern variable; the stored name includes the leading `?`.
    Var(Symbol),
    Const(Rational),
    /// A literal expression variable such as `x`.
    Sym(Symbol),
    Op(OpKind, Vec<Pattern>),
}

impl Pattern {
    pub fn vars(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Pattern::Var(v) => {
                out.insert(v.clone());
            }
            Pattern::Op(_, c) => c.iter().for_each(|p| p.collect_vars(out)),
            _ => {}
        }
    }

    pub fn contains_op(&self, op: OpKind) -> bool {
        match self {
            Pattern::Op(o, c) => *o == op || c.iter().any(|p| p.contains_op(op)),
            _ => false,
        }
    }

    pub(crate) fn from_sexp(s: &Sexp) -> Result<Pattern> {
        match s {
            Sexp::Atom { text, pos } => {
                if let Some(name) = text.strip_prefix('?') {
                    if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
                        return Err(Error::Parse {
                            pos: *pos,
                            msg: format!("bad pattern variable `{text}`"),
                        });
                    }
                    return Ok(Pattern::Var(Symbol::new(text)));
                }
                if let Some(r) = parse_rational(text) {
                    return r.map(Pattern::Const).map_err(|e| Error::Parse {
                        pos: *pos,
                        msg: e.to_string(),
                    });
                }
                if is_identifier(text) {
                    Ok(Pattern::Sym(Symbol::new(text)))
                } else {
                    Err(Error::Parse {
                        pos: *pos,
                        msg: format!("unexpected token `{text}`"),
                    })
                }
            }
            Sexp::List { items, .. } => {
                let (op, nargs) = parse_head(items)?;
                let children = items[1..=nargs]
                    .iter()
                    .map(Pattern::from_sexp)
                    .collect::<Result<Vec<_>>>()?;
                Ok(Pattern::Op(op, children))
            }
        }
    }
}

impl std::str::FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pattern::from_sexp(&crate::sexp::read(s)?)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Var(v) | Pattern::Sym(v) => write!(f, "{v}"),
            Pattern::Const(r) => write!(f, "{}", format_rational(r)),
            Pattern::Op(OpKind::PowInt(k), c) => write!(f, "(pow {} {k})", c[0]),
            Pattern::Op(op, c) => {
                write!(f, "({op}")?;
                for p in c {
                    write!(f, " {p}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Pattern-variable bindings.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Subst(SmallVec<[(Symbol, ClassId); 4]>);

impl Subst {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Option<ClassId> {
        self.0
            .iter()
            .find(|(v, _)| v.as_str() == var)
            .map(|&(_, c)| c)
    }

    pub fn insert(&mut self, var: Symbol, class: ClassId) {
        match self.0.iter_mut().find(|(v, _)| *v == var) {
            Some(slot) => slot.1 = class,
            None => self.0.push((var, class)),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Symbol, ClassId)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// All `(subst, class)` pairs such that `p` instantiated under `subst` is
/// represented in `class`. The graph must be rebuilt.
pub fn ematch(p: &Pattern, g: &EGraph) -> Vec<(Subst, ClassId)> {
    ematch_limited(p, g, usize::MAX)
}

pub(crate) fn ematch_limited(p: &Pattern, g: &EGraph, limit: usize) -> Vec<(Subst, ClassId)> {
    let mut out = Vec::new();
    let root_op = match p {
        Pattern::Op(op, _) => Some(*op),
        _ => None,
    };
    let mut found = Vec::new();
    for class in g.classes() {
        if let Some(op) = root_op {
            if !class.nodes().iter().any(|n| n.op() == op) {
                continue;
            }
        }
        found.clear();
        match_class(p, g, class.id(), &Subst::new(), &mut found);
        found.sort_unstable();
        found.dedup();
        for s in found.drain(..) {
            out.push((s, class.id()));
            if out.len() >= limit {
                return out;
            }
        }
    }
    out
}

fn match_class(p: &Pattern, g: &EGraph, class: ClassId, subst: &Subst, out: &mut Vec<Subst>) {
    let class = g.find(class);
    match p {
        Pattern::Var(v) => match subst.get(v.as_str()) {
            Some(bound) => {
                if g.find(bound) == class {
                    out.push(subst.clone());
                }
            }
            None => {
                let mut s = subst.clone();
                s.insert(v.clone(), class);
                out.push(s);
            }
        },
        Pattern::Const(r) => {
            if g.class(class)
                .nodes()
                .iter()
                .any(|n| matches!(n, ENode::Const(c) if c == r))
            {
                out.push(subst.clone());
            }
        }
        Pattern::Sym(name) => {
            if g.class(class)
                .nodes()
                .iter()
                .any(|n| matches!(n, ENode::Var(s) if s == name))
            {
                out.push(subst.clone());
            }
        }
        Pattern::Op(op, children) => {
            for node in g.class(class).nodes() {
                if node.op() != *op || node.children().len() != children.len() {
                    continue;
                }
                let mut partial = vec![subst.clone()];
                for (cp, &cid) in children.iter().zip(node.children()) {
                    let mut next = Vec::new();
                    for s in &partial {
                        match_class(cp, g, cid, s, &mut next);
                    }
                    partial = next;
                    if partial.is_empty() {
                        break;
                    }
                }
                out.extend(partial);
            }
        }
    }
}

/// Adds `p` under `subst` to the graph and returns its class.
pub(crate) fn instantiate(p: &Pattern, subst: &Subst, g: &mut EGraph) -> ClassId {
    match p {
        Pattern::Var(v) => g.find(subst.get(v.as_str()).expect("rhs variable bound by lhs")),
        Pattern::Const(r) => g.add(ENode::Const(r.clone())),
        Pattern::Sym(s) => g.add(ENode::Var(s.clone())),
        Pattern::Op(op, children) => {
            let ids = children.iter().map(|c| instantiate(c, subst, g)).collect();
            g.add(ENode::Op(*op, ids))
        }
    }
}

/// Interval of `p` under `subst`, using the class interval wherever the
/// instantiated subterm already exists in the graph. `None` on domain errors.
pub(crate) fn pattern_interval(p: &Pattern, subst: &Subst, g: &EGraph) -> Option<Interval> {
    eval_pattern(p, subst, g).map(|(_, iv)| iv)
}

fn eval_pattern(p: &Pattern, subst: &Subst, g: &EGraph) -> Option<(Option<ClassId>, Interval)> {
    match p {
        Pattern::Var(v) => {
            let c = g.find(subst.get(v.as_str())?);
            Some((Some(c), g.data(c)))
        }
        Pattern::Const(r) => {
            let node = ENode::Const(r.clone());
            Some((g.lookup(&node), round_outward(r, r)))
        }
        Pattern::Sym(s) => {
            let node = ENode::Var(s.clone());
            Some((g.lookup(&node), g.env().get(s.as_str())?))
        }
        Pattern::Op(op, children) => {
            let kids = children
                .iter()
                .map(|c| eval_pattern(c, subst, g))
                .collect::<Option<Vec<_>>>()?;
            let args: Vec<Interval> = kids.iter().map(|(_, iv)| *iv).collect();
            let computed = extend(*op, &args).ok()?;
            let ids: Option<SmallVec<[ClassId; 2]>> = kids.iter().map(|(c, _)| *c).collect();
            if let Some(ids) = ids {
                if let Some(c) = g.lookup(&ENode::Op(*op, ids)) {
                    let narrowed = meet(&computed, &g.data(c)).unwrap_or(g.data(c));
                    return Some((Some(c), narrowed));
                }
            }
            Some((None, computed))
        }
    }
}
