//! Shared helpers for the integration suites: a random expression
//! generator, rational sampling, and an exact evaluator used as an oracle.

#![allow(dead_code)]

pub mod soundness;

use std::collections::BTreeMap;

use egraph_bounds::{extend, round_outward, DomainEnv, Expr, Interval, OpKind, Pattern, Rational};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::rngs::StdRng;
use rand::Rng;

pub type Assignment = BTreeMap<String, Rational>;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).unwrap()
}

/// Number of representable doubles strictly between `a` and `b`, plus one;
/// zero when equal.
pub fn float_steps(a: f64, b: f64) -> u64 {
    fn key(x: f64) -> i64 {
        let bits = x.to_bits() as i64;
        if bits < 0 {
            i64::MIN - bits
        } else {
            bits
        }
    }
    (key(a) - key(b)).unsigned_abs()
}

/// `a` is within `n` float steps of `target`; a target of exactly zero is
/// compared with the absolute tolerance `n * EPSILON` because the float
/// steps around zero are subnormal.
pub fn close(a: f64, target: f64, n: u64) -> bool {
    if target == 0.0 {
        a.abs() <= n as f64 * f64::EPSILON
    } else {
        float_steps(a, target) <= n
    }
}

pub fn interval_close(a: &Interval, lo: f64, hi: f64, n: u64) -> bool {
    close(a.lo(), lo, n) && close(a.hi(), hi, n)
}

/// Converts an expression to a pattern whose variables are literal symbols,
/// so one evaluator serves both.
pub fn expr_pattern(e: &Expr) -> Pattern {
    match e {
        Expr::Const(r) => Pattern::Const(r.clone()),
        Expr::Var(s) => Pattern::Sym(s.clone()),
        Expr::Op(op, kids) => Pattern::Op(*op, kids.iter().map(expr_pattern).collect()),
    }
}

/// Result of exact evaluation at a rational point.
#[derive(Clone, Debug, PartialEq)]
pub enum Exact {
    Value(Rational),
    Undefined,
    /// A square root of a non-square rational was needed.
    Irrational,
}

fn rational_sqrt(r: &Rational) -> Option<Rational> {
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    (&n * &n == *r.numer() && &d * &d == *r.denom()).then(|| Rational::new(n, d))
}

fn leaf_value(name: &str, a: &Assignment) -> Rational {
    a.get(name)
        .unwrap_or_else(|| panic!("no value for {name}"))
        .clone()
}

pub fn eval_exact(p: &Pattern, a: &Assignment) -> Exact {
    match p {
        Pattern::Const(r) => Exact::Value(r.clone()),
        Pattern::Var(v) | Pattern::Sym(v) => Exact::Value(leaf_value(v.as_str(), a)),
        Pattern::Op(op, kids) => {
            let mut vals = Vec::with_capacity(kids.len());
            for k in kids {
                match eval_exact(k, a) {
                    Exact::Value(v) => vals.push(v),
                    other => return other,
                }
            }
            let zero = Rational::zero();
            let v = match op {
                OpKind::Add => &vals[0] + &vals[1],
                OpKind::Sub => &vals[0] - &vals[1],
                OpKind::Mul => &vals[0] * &vals[1],
                OpKind::Div => {
                    if vals[1].is_zero() {
                        return Exact::Undefined;
                    }
                    &vals[0] / &vals[1]
                }
                OpKind::Neg => -&vals[0],
                OpKind::Recip => {
                    if vals[0].is_zero() {
                        return Exact::Undefined;
                    }
                    vals[0].recip()
                }
                OpKind::Sqrt => {
                    if vals[0] < zero {
                        return Exact::Undefined;
                    }
                    match rational_sqrt(&vals[0]) {
                        Some(s) => s,
                        None => return Exact::Irrational,
                    }
                }
                OpKind::Sq => &vals[0] * &vals[0],
                OpKind::PowInt(k) => {
                    let mut acc = Rational::one();
                    for _ in 0..*k {
                        acc *= &vals[0];
                    }
                    acc
                }
                OpKind::Const | OpKind::Var => unreachable!("leaf operator in Op"),
            };
            Exact::Value(v)
        }
    }
}

/// Rigorous enclosure of the value at a rational point; `None` when the
/// value is undefined or cannot be bounded.
pub fn eval_enclosure(p: &Pattern, a: &Assignment) -> Option<Interval> {
    let iv = match p {
        Pattern::Const(r) => round_outward(r, r),
        Pattern::Var(v) | Pattern::Sym(v) => {
            let r = leaf_value(v.as_str(), a);
            round_outward(&r, &r)
        }
        Pattern::Op(op, kids) => {
            let args = kids
                .iter()
                .map(|k| eval_enclosure(k, a))
                .collect::<Option<Vec<_>>>()?;
            if *op == OpKind::Sqrt && args[0].lo() < 0.0 {
                return None;
            }
            extend(*op, &args).ok()?
        }
    };
    (!iv.is_top()).then_some(iv)
}

pub fn rational_in(iv: &Interval, v: &Rational) -> bool {
    let lo_ok = iv.lo() == f64::NEG_INFINITY || Rational::from_float(iv.lo()).unwrap() <= *v;
    let hi_ok = iv.hi() == f64::INFINITY || *v <= Rational::from_float(iv.hi()).unwrap();
    lo_ok && hi_ok
}

pub fn intersects(a: &Interval, b: &Interval) -> bool {
    a.lo() <= b.hi() && b.lo() <= a.hi()
}

/// Random rational `p/q` with `|p| <= max_num` and `1 <= q <= max_den`.
pub fn random_rational(rng: &mut StdRng, max_num: i64, max_den: i64) -> Rational {
    rat(rng.gen_range(-max_num..=max_num), rng.gen_range(1..=max_den))
}

/// Uniformly spaced random rational in `[lo, hi]`.
pub fn random_point(rng: &mut StdRng, lo: &Rational, hi: &Rational) -> Rational {
    let k = rng.gen_range(0..=1000i64);
    lo + (hi - lo) * rat(k, 1000)
}

pub struct FuzzCase {
    pub expr: Expr,
    pub bounds: BTreeMap<String, (Rational, Rational)>,
    pub env: DomainEnv,
}

const VARS: [&str; 3] = ["x", "y", "z"];

pub fn random_expr(rng: &mut StdRng, depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.7) {
            Expr::var(VARS[rng.gen_range(0..VARS.len())])
        } else {
            let r = random_rational(rng, 5, 3);
            Expr::Const(r)
        };
    }
    let op = match rng.gen_range(0..12) {
        0 | 1 => OpKind::Add,
        2 | 3 => OpKind::Sub,
        4 | 5 => OpKind::Mul,
        6 => OpKind::Div,
        7 => OpKind::Neg,
        8 => OpKind::Recip,
        9 => OpKind::Sqrt,
        10 => OpKind::Sq,
        _ => OpKind::PowInt(rng.gen_range(0..=3)),
    };
    let kids = (0..op.arity())
        .map(|_| random_expr(rng, depth - 1))
        .collect();
    Expr::op(op, kids).unwrap()
}

fn random_bounds(rng: &mut StdRng) -> (Rational, Rational) {
    loop {
        let a = random_rational(rng, 8, 4);
        let b = random_rational(rng, 8, 4);
        if a < b {
            return (a, b);
        }
        if b < a {
            return (b, a);
        }
    }
}

/// A random expression of depth at most `max_depth` with random rational
/// domains whose natural extension at the root is defined and bounded.
pub fn random_case(rng: &mut StdRng, max_depth: usize) -> FuzzCase {
    loop {
        let expr = random_expr(rng, max_depth);
        let mut bounds = BTreeMap::new();
        let mut env = DomainEnv::new();
        for v in VARS {
            let (lo, hi) = random_bounds(rng);
            env.insert(v, round_outward(&lo, &hi));
            bounds.insert(v.to_string(), (lo, hi));
        }
        match egraph_bounds::natural_extension(&expr, &env) {
            Ok(root) if root.lo().is_finite() && root.hi().is_finite() => {
                return FuzzCase { expr, bounds, env };
            }
            _ => continue,
        }
    }
}

pub fn random_assignment(rng: &mut StdRng, case: &FuzzCase) -> Assignment {
    case.bounds
        .iter()
        .map(|(n, (lo, hi))| (n.clone(), random_point(rng, lo, hi)))
        .collect()
}

/// Whether the concrete value of `p` at `a` is certainly outside `root`.
/// Points where `p` is undefined are not violations.
pub fn violates(p: &Pattern, a: &Assignment, root: &Interval) -> bool {
    match eval_exact(p, a) {
        Exact::Value(v) => !rational_in(root, &v),
        Exact::Undefined => false,
        Exact::Irrational => match eval_enclosure(p, a) {
            Some(enc) => !intersects(&enc, root),
            None => false,
        },
    }
}

pub fn is_negative(r: &Rational) -> bool {
    r.is_negative()
}
