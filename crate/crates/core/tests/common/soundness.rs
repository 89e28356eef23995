//! Concrete-equivalence testing of rewrite rules at random rational points.

use egraph_bounds::{ConditionKind, OpKind, Rational, Rule};
use num_traits::Zero;
use rand::rngs::StdRng;
use rand::Rng;

use super::{eval_enclosure, eval_exact, intersects, random_rational, rat, rational_in, Assignment, Exact};

/// Guard-violating assignments for every guarded rule of the default
/// catalog. At each one the rule's right side is undefined or differs from
/// the left side.
pub const COUNTEREXAMPLES: &[(&str, &[(&str, &str)])] = &[
    ("div-cancel", &[("?a", "0")]),
    ("mul-div-cancel", &[("?a", "1"), ("?b", "0")]),
    ("div-mul-cancel", &[("?a", "0"), ("?b", "1")]),
    ("mul-recip-cancel", &[("?a", "0")]),
    ("div-to-recip", &[("?a", "1"), ("?b", "0")]),
    ("recip-to-div", &[("?a", "1"), ("?b", "0")]),
    ("recip-recip", &[("?a", "0")]),
    ("sqrt-conj", &[("?a", "0"), ("?b", "0")]),
    ("div-flip", &[("?a", "1"), ("?b", "0")]),
    ("div-sum-flip", &[("?a", "0"), ("?b", "1")]),
    (
        "complete-square",
        &[("?a", "0"), ("?b", "1"), ("?c", "1"), ("?x", "1")],
    ),
    (
        "quadratic-factor",
        &[("?a", "1"), ("?b", "0"), ("?c", "1"), ("?x", "1")],
    ),
    (
        "quadratic-factor-monic",
        &[("?b", "0"), ("?c", "1"), ("?x", "1")],
    ),
];

pub fn assignment(pairs: &[(&str, &str)]) -> Assignment {
    pairs
        .iter()
        .map(|(k, v)| {
            let r = egraph_bounds::expr::parse_rational(v).unwrap().unwrap();
            (k.to_string(), r)
        })
        .collect()
}

/// Guard value at `a`; `None` when an enclosure cannot decide it.
pub fn guard_holds(rule: &Rule, a: &Assignment) -> Option<bool> {
    for c in &rule.guard {
        let holds = match eval_exact(&c.pattern, a) {
            Exact::Value(v) => match c.kind {
                ConditionKind::Nonzero => !v.is_zero(),
                ConditionKind::Nonneg => v >= Rational::zero(),
                ConditionKind::Pos => v > Rational::zero(),
            },
            Exact::Undefined => false,
            Exact::Irrational => {
                let iv = eval_enclosure(&c.pattern, a)?;
                match c.kind {
                    ConditionKind::Nonzero if !iv.contains_zero() => true,
                    ConditionKind::Nonneg if iv.lo() >= 0.0 => true,
                    ConditionKind::Pos if iv.lo() > 0.0 => true,
                    _ if iv.hi() < 0.0 => false,
                    _ => return None,
                }
            }
        };
        if !holds {
            return Some(false);
        }
    }
    Some(true)
}

/// Compares both sides at `a`. `Ok(false)` when the left side is undefined
/// and the case does not count.
pub fn check_case(rule: &Rule, a: &Assignment) -> Result<bool, String> {
    let fail = |what: &str| {
        Err(format!(
            "{}: {what} at {}",
            rule.name,
            a.iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(", ")
        ))
    };
    let lhs = eval_exact(&rule.lhs, a);
    let rhs = eval_exact(&rule.rhs, a);
    match (lhs, rhs) {
        (Exact::Undefined, _) => Ok(false),
        (_, Exact::Undefined) => fail("right side undefined where left side is defined"),
        (Exact::Value(l), Exact::Value(r)) => {
            if l == r {
                Ok(true)
            } else {
                fail(&format!("{l} != {r}"))
            }
        }
        (Exact::Value(l), Exact::Irrational) => match eval_enclosure(&rule.rhs, a) {
            Some(r) if rational_in(&r, &l) => Ok(true),
            _ => fail("right enclosure misses the exact left value"),
        },
        (Exact::Irrational, rhs) => {
            let Some(l) = eval_enclosure(&rule.lhs, a) else {
                return Ok(false);
            };
            let ok = match rhs {
                Exact::Value(r) => rational_in(&l, &r),
                _ => eval_enclosure(&rule.rhs, a).is_some_and(|r| intersects(&l, &r)),
            };
            if ok {
                Ok(true)
            } else {
                fail("enclosures of the two sides are disjoint")
            }
        }
    }
}

fn sample_value(rng: &mut StdRng, squares: bool) -> Rational {
    if squares && rng.gen_bool(0.4) {
        let p: i64 = rng.gen_range(0..=6);
        let q: i64 = rng.gen_range(1..=4);
        return rat(p * p, q * q);
    }
    random_rational(rng, 12, 6)
}

/// Tests `cases` guard-satisfying assignments with a defined left side.
pub fn rule_soundness(rule: &Rule, rng: &mut StdRng, cases: usize) -> Result<usize, String> {
    let vars = rule.lhs.vars();
    let squares = rule.lhs.contains_op(OpKind::Sqrt) || rule.rhs.contains_op(OpKind::Sqrt);
    let mut counted = 0;
    let mut attempts = 0;
    while counted < cases {
        attempts += 1;
        if attempts > cases * 200 {
            return Err(format!(
                "{}: only {counted} guard-satisfying cases in {attempts} attempts",
                rule.name
            ));
        }
        let a: Assignment = vars
            .iter()
            .map(|v| (v.to_string(), sample_value(rng, squares)))
            .collect();
        if guard_holds(rule, &a) != Some(true) {
            continue;
        }
        if check_case(rule, &a)? {
            counted += 1;
        }
    }
    Ok(counted)
}

/// Checks that `a` violates the guard and that the rewrite fails there.
pub fn counterexample_holds(rule: &Rule, a: &Assignment) -> Result<(), String> {
    if guard_holds(rule, a) != Some(false) {
        return Err(format!("{}: counterexample satisfies the guard", rule.name));
    }
    let lhs = eval_exact(&rule.lhs, a);
    let rhs = eval_exact(&rule.rhs, a);
    match (&lhs, &rhs) {
        (_, Exact::Undefined) => Ok(()),
        (Exact::Value(l), Exact::Value(r)) if l != r => Ok(()),
        (Exact::Undefined, Exact::Value(_)) => Ok(()),
        _ => Err(format!(
            "{}: counterexample does not break the rule ({lhs:?} vs {rhs:?})",
            rule.name
        )),
    }
}
