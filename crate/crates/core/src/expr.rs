//! Expression syntax trees, the s-expression front end, concrete evaluation,
//! and the baseline bottom-up interval interpreter.
//!
//! Grammar:
//!
//! ```text
//! expr  := atom | "(" op expr+ ")"
//! op    := "+" | "-" | "*" | "/" | "neg" | "recip" | "sqrt" | "sq" | "pow"
//! atom  := identifier | integer | decimal | integer "/" integer
//! ```
//!
//! `-` is always binary; unary minus is spelled `neg`. `(pow e k)` takes an
//! integer literal `k >= 2`, and `(pow e 2)` is read as `(sq e)`.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::interval::{extend, round_outward, Interval, OpKind};
use crate::sexp::{self, Sexp};

pub type Rational = BigRational;

/// Interned-by-refcount identifier.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

impl Borrow<str> for Symbol {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Expr {
    Const(Rational),
    Var(Symbol),
    /// Operator application; `OpKind::Const` and `OpKind::Var` never appear here.
    Op(OpKind, Vec<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(Symbol::new(name))
    }

    pub fn int(v: i64) -> Expr {
        Expr::Const(Rational::from_integer(BigInt::from(v)))
    }

    pub fn op(op: OpKind, children: Vec<Expr>) -> Result<Expr> {
        if matches!(op, OpKind::Const | OpKind::Var) {
            return Err(Error::Input(format!("`{op}` is not an operator")));
        }
        if children.len() != op.arity() {
            return Err(Error::Arity {
                op: op.name().to_string(),
                expected: op.arity(),
                found: children.len(),
            });
        }
        Ok(Expr::Op(op, children))
    }

    pub fn kind(&self) -> OpKind {
        match self {
            Expr::Const(_) => OpKind::Const,
            Expr::Var(_) => OpKind::Var,
            Expr::Op(op, _) => *op,
        }
    }

    pub fn children(&self) -> &[Expr] {
        match self {
            Expr::Op(_, c) => c,
            _ => &[],
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(Expr::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(Expr::depth).max().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Expr::Var(s) => {
                out.insert(s.clone());
            }
            Expr::Const(_) => {}
            Expr::Op(_, c) => c.iter().for_each(|e| e.collect_vars(out)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(r) => write!(f, "{}", format_rational(r)),
            Expr::Var(s) => write!(f, "{s}"),
            Expr::Op(OpKind::PowInt(k), c) => write!(f, "(pow {} {k})", c[0]),
            Expr::Op(op, c) => {
                write!(f, "({}", op.name())?;
                for e in c {
                    write!(f, " {e}")?;
                }
                write!(f, ")")
            }
        }
    }
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses a numeric literal: integer, decimal (optional exponent), or `p/q`.
/// Returns `None` when `text` does not look numeric.
pub fn parse_rational(text: &str) -> Option<Result<Rational>> {
    let body = text.strip_prefix(['-', '+']).unwrap_or(text);
    let first = body.chars().next()?;
    if !(first.is_ascii_digit() || (first == '.' && body.len() > 1)) {
        return None;
    }
    let bad = || Some(Err(Error::Input(format!("malformed number `{text}`"))));
    let negative = text.starts_with('-');
    let value = if let Some((p, q)) = body.split_once('/') {
        if p.is_empty() || q.is_empty() || !all_digits(p) || !all_digits(q) {
            return bad();
        }
        let p: BigInt = p.parse().ok()?;
        let q: BigInt = q.parse().ok()?;
        if q.is_zero() {
            return Some(Err(Error::Input(format!("zero denominator in `{text}`"))));
        }
        Rational::new(p, q)
    } else {
        let (mantissa, exp) = match body.split_once(['e', 'E']) {
            Some((m, e)) => match e.parse::<i32>() {
                Ok(e) if e.abs() <= 4000 => (m, e),
                _ => return bad(),
            },
            None => (body, 0),
        };
        let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if (int.is_empty() && frac.is_empty()) || !all_digits(int) || !all_digits(frac) {
            return bad();
        }
        let digits = format!("{int}{frac}");
        let n: BigInt = digits.parse().ok()?;
        let scale = exp - frac.len() as i32;
        let ten = BigInt::from(10);
        if scale >= 0 {
            Rational::from_integer(n * ten.pow(scale as u32))
        } else {
            Rational::new(n, ten.pow((-scale) as u32))
        }
    };
    Some(Ok(if negative { -value } else { value }))
}

fn all_digits(s: &str) -> bool {
    s.chars().all(|c| c.is_ascii_digit())
}

pub(crate) fn is_identifier(text: &str) -> bool {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '_')
        && OpKind::from_name(text).is_none()
        && text != "pow"
}

/// Parses the head and argument count of an operator application, handling
/// the `pow` special form. Shared with the pattern parser.
pub(crate) fn parse_head(items: &[Sexp]) -> Result<(OpKind, usize)> {
    let (head, pos) = match items.first() {
        Some(Sexp::Atom { text, pos }) => (text.as_str(), *pos),
        Some(other) => {
            return Err(Error::Parse {
                pos: other.pos(),
                msg: "operator position must hold an operator name".into(),
            })
        }
        None => {
            return Err(Error::Parse {
                pos: 0,
                msg: "empty application `()`".into(),
            })
        }
    };
    let nargs = items.len() - 1;
    if head == "pow" {
        if nargs != 2 {
            return Err(Error::Arity {
                op: "pow".into(),
                expected: 2,
                found: nargs,
            });
        }
        let exponent = match &items[2] {
            Sexp::Atom { text, .. } => text.parse::<u32>().ok(),
            _ => None,
        };
        return match exponent {
            Some(2) => Ok((OpKind::Sq, 1)),
            Some(k) if k > 2 => Ok((OpKind::PowInt(k), 1)),
            _ => Err(Error::Parse {
                pos: items[2].pos(),
                msg: "pow exponent must be an integer literal >= 2".into(),
            }),
        };
    }
    let op = OpKind::from_name(head).ok_or_else(|| Error::Parse {
        pos,
        msg: format!("unknown operator `{head}`"),
    })?;
    if nargs != op.arity() {
        return Err(Error::Arity {
            op: head.to_string(),
            expected: op.arity(),
            found: nargs,
        });
    }
    Ok((op, nargs))
}

pub fn parse(text: &str) -> Result<Expr> {
    from_sexp(&sexp::read(text)?)
}

fn from_sexp(s: &Sexp) -> Result<Expr> {
    match s {
        Sexp::Atom { text, pos } => {
            if let Some(r) = parse_rational(text) {
                return r.map(Expr::Const).map_err(|e| Error::Parse {
                    pos: *pos,
                    msg: e.to_string(),
                });
            }
            if is_identifier(text) {
                Ok(Expr::var(text))
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
                .map(from_sexp)
                .collect::<Result<Vec<_>>>()?;
            Ok(Expr::Op(op, children))
        }
    }
}

/// Variable domains.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DomainEnv(BTreeMap<Symbol, Interval>);

impl DomainEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, domain: Interval) -> Self {
        self.insert(name, domain);
        self
    }

    pub fn insert(&mut self, name: &str, domain: Interval) {
        self.0.insert(Symbol::new(name), domain);
    }

    pub fn get(&self, name: &str) -> Option<Interval> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Interval)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Fails with `UnboundVariable` if some variable of `e` has no domain.
    pub fn check_covers(&self, e: &Expr) -> Result<()> {
        match e.vars().into_iter().find(|v| !self.0.contains_key(v)) {
            Some(v) => Err(Error::UnboundVariable(v.to_string())),
            None => Ok(()),
        }
    }
}

/// A concrete assignment of variables.
pub type Point = BTreeMap<Symbol, f64>;

pub fn eval_concrete(e: &Expr, env: &Point) -> Result<f64> {
    let v = match e {
        Expr::Const(r) => r.to_f64().unwrap_or(f64::NAN),
        Expr::Var(s) => *env
            .get(s)
            .ok_or_else(|| Error::UnboundVariable(s.to_string()))?,
        Expr::Op(op, c) => {
            let a = eval_concrete(&c[0], env)?;
            let b = || eval_concrete(&c[1], env);
            match op {
                OpKind::Add => a + b()?,
                OpKind::Sub => a - b()?,
                OpKind::Mul => a * b()?,
                OpKind::Div => {
                    let d = b()?;
                    if d == 0.0 {
                        return Err(Error::Eval("division by zero".into()));
                    }
                    a / d
                }
                OpKind::Neg => -a,
                OpKind::Recip => {
                    if a == 0.0 {
                        return Err(Error::Eval("reciprocal of zero".into()));
                    }
                    1.0 / a
                }
                OpKind::Sqrt => {
                    if a < 0.0 {
                        return Err(Error::Eval(format!("sqrt of negative value {a}")));
                    }
                    a.sqrt()
                }
                OpKind::Sq => a * a,
                OpKind::PowInt(k) => a.powi(*k as i32),
                OpKind::Const | OpKind::Var => unreachable!("leaf tag in Op node"),
            }
        }
    };
    if v.is_nan() {
        return Err(Error::Eval("not a number".into()));
    }
    Ok(v)
}

/// Bottom-up interval evaluation without any rewriting.
pub fn natural_extension(e: &Expr, env: &DomainEnv) -> Result<Interval> {
    match e {
        Expr::Const(r) => Ok(round_outward(r, r)),
        Expr::Var(s) => env
            .get(s.as_str())
            .ok_or_else(|| Error::UnboundVariable(s.to_string())),
        Expr::Op(op, c) => {
            let args = c
                .iter()
                .map(|e| natural_extension(e, env))
                .collect::<Result<Vec<_>>>()?;
            extend(*op, &args)
        }
    }
}

const SAMPLE_GRID_CAP: usize = 4_000_000;
const SAMPLE_RANDOM: usize = 1000;
const SAMPLE_CLAMP: f64 = 1e6;

/// Inner approximation of the range of `e` over `env` by evaluating a grid
/// of `n` points per variable plus fixed-seed random points. Points where
/// evaluation fails are skipped.
pub fn sample_range(e: &Expr, env: &DomainEnv, n: usize) -> Result<Interval> {
    if n < 2 {
        return Err(Error::Input("sample_range needs n >= 2".into()));
    }
    env.check_covers(e)?;
    let vars: Vec<Symbol> = e.vars().into_iter().collect();
    let domains: Vec<(f64, f64)> = vars
        .iter()
        .map(|v| {
            let d = env.get(v.as_str()).unwrap();
            (d.lo().max(-SAMPLE_CLAMP), d.hi().min(SAMPLE_CLAMP))
        })
        .collect();

    let mut per_axis = n;
    while vars.len() > 1 && per_axis > 2 && per_axis.saturating_pow(vars.len() as u32) > SAMPLE_GRID_CAP {
        per_axis = (per_axis * 9 / 10).max(2);
    }

    let mut acc: Option<(f64, f64)> = None;
    let mut point = Point::new();
    let mut record = |point: &Point| {
        if let Ok(v) = eval_concrete(e, point) {
            if v.is_finite() {
                acc = Some(match acc {
                    None => (v, v),
                    Some((lo, hi)) => (lo.min(v), hi.max(v)),
                });
            }
        }
    };

    let grid_value = |axis: usize, i: usize| {
        let (lo, hi) = domains[axis];
        if lo == hi || i == 0 {
            lo
        } else if i == per_axis - 1 {
            hi
        } else {
            lo + (hi - lo) * (i as f64) / ((per_axis - 1) as f64)
        }
    };

    let mut idx = vec![0usize; vars.len()];
    loop {
        for (axis, v) in vars.iter().enumerate() {
            point.insert(v.clone(), grid_value(axis, idx[axis]));
        }
        record(&point);
        // odometer increment
        let mut axis = 0;
        loop {
            if axis == vars.len() {
                break;
            }
            idx[axis] += 1;
            if idx[axis] < per_axis {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
        if axis == vars.len() {
            break;
        }
    }

    let mut rng = StdRng::seed_from_u64(0x5eed);
    for _ in 0..SAMPLE_RANDOM.min(if vars.is_empty() { 0 } else { SAMPLE_RANDOM }) {
        for (axis, v) in vars.iter().enumerate() {
            let (lo, hi) = domains[axis];
            let x = if lo == hi { lo } else { rng.gen_range(lo..=hi) };
            point.insert(v.clone(), x);
        }
        record(&point);
    }

    match acc {
        Some((lo, hi)) => Interval::new(lo, hi),
        None => Err(Error::Eval(format!(
            "`{e}` could not be evaluated at any sample point"
        ))),
    }
}
