//! Outwardly rounded interval arithmetic over extended-real `f64` endpoints.
//!
//! Endpoints are rounded by stepping to the adjacent float only when the
//! underlying operation was inexact. Exactness is detected with error-free
//! transformations (TwoSum, FMA residuals), so exactly representable results
//! such as `[1,2] - [1,2] = [-1,1]` are never widened.

use std::fmt;

use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};

/// A closed interval `[lo, hi]` with `lo <= hi` and no NaN endpoints.
///
/// Infinite endpoints are allowed; `[-inf, +inf]` is the top element of the
/// lattice. There is no empty interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub const TOP: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::InvalidInterval(format!(
                "NaN endpoint in [{lo}, {hi}]"
            )));
        }
        if lo > hi {
            return Err(Error::InvalidInterval(format!(
                "lower bound {lo} exceeds upper bound {hi}"
            )));
        }
        Ok(Self::raw(lo, hi))
    }

    pub fn point(v: f64) -> Result<Self> {
        Self::new(v, v)
    }

    /// Builds an interval from computed endpoints, mapping NaN to the
    /// infinite endpoint of the same side and `-0.0` to `0.0`.
    fn raw(lo: f64, hi: f64) -> Self {
        let lo = if lo.is_nan() { f64::NEG_INFINITY } else { lo + 0.0 };
        let hi = if hi.is_nan() { f64::INFINITY } else { hi + 0.0 };
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    /// `self ⊆ other`.
    pub fn is_subset(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_top(&self) -> bool {
        self.lo == f64::NEG_INFINITY && self.hi == f64::INFINITY
    }

    pub fn width(&self) -> f64 {
        width(self)
    }

    /// Smallest interval containing both operands.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::raw(self.lo.min(other.lo), self.hi.max(other.hi))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Operator tags of the expression language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Recip,
    Sqrt,
    Sq,
    /// Integer power with exponent `>= 2`.
    PowInt(u32),
    Const,
    Var,
}

impl OpKind {
    pub fn arity(self) -> usize {
        match self {
            OpKind::Const | OpKind::Var => 0,
            OpKind::Neg | OpKind::Recip | OpKind::Sqrt | OpKind::Sq | OpKind::PowInt(_) => 1,
            OpKind::Add | OpKind::Sub | OpKind::Mul | OpKind::Div => 2,
        }
    }

    /// Surface-syntax spelling of the operator.
    pub fn name(self) -> &'static str {
        match self {
            OpKind::Add => "+",
            OpKind::Sub => "-",
            OpKind::Mul => "*",
            OpKind::Div => "/",
            OpKind::Neg => "neg",
            OpKind::Recip => "recip",
            OpKind::Sqrt => "sqrt",
            OpKind::Sq => "sq",
            OpKind::PowInt(_) => "pow",
            OpKind::Const => "const",
            OpKind::Var => "var",
        }
    }

    /// Operator for a non-`pow` head token.
    pub fn from_name(name: &str) -> Option<OpKind> {
        Some(match name {
            "+" => OpKind::Add,
            "-" => OpKind::Sub,
            "*" => OpKind::Mul,
            "/" => OpKind::Div,
            "neg" => OpKind::Neg,
            "recip" => OpKind::Recip,
            "sqrt" => OpKind::Sqrt,
            "sq" => OpKind::Sq,
            _ => return None,
        })
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Natural interval extension of `op` applied to `args`.
pub fn extend(op: OpKind, args: &[Interval]) -> Result<Interval> {
    if args.len() != op.arity() {
        return Err(Error::Arity {
            op: op.name().to_string(),
            expected: op.arity(),
            found: args.len(),
        });
    }
    match op {
        OpKind::Add => Ok(add(&args[0], &args[1])),
        OpKind::Sub => Ok(sub(&args[0], &args[1])),
        OpKind::Mul => Ok(mul(&args[0], &args[1])),
        OpKind::Div => Ok(div(&args[0], &args[1])),
        OpKind::Neg => Ok(neg(&args[0])),
        OpKind::Recip => Ok(recip(&args[0])),
        OpKind::Sqrt => sqrt(&args[0]),
        OpKind::Sq => Ok(pow_int(&args[0], 2)),
        OpKind::PowInt(k) if k >= 2 => Ok(pow_int(&args[0], k)),
        OpKind::PowInt(k) => Err(Error::Domain(format!(
            "integer power exponent must be at least 2, got {k}"
        ))),
        OpKind::Const | OpKind::Var => Err(Error::Domain(format!(
            "`{}` is a leaf and has no interval extension",
            op.name()
        ))),
    }
}

/// Lattice meet (intersection). Fails with `EmptyMeet` on disjoint inputs.
pub fn meet(a: &Interval, b: &Interval) -> Result<Interval> {
    let lo = a.lo.max(b.lo);
    let hi = a.hi.min(b.hi);
    if lo > hi {
        return Err(Error::EmptyMeet {
            a: *a,
            b: *b,
            class: None,
            rule: None,
        });
    }
    Ok(Interval::raw(lo, hi))
}

pub fn width(a: &Interval) -> f64 {
    a.hi - a.lo
}

/// Encloses the exact real interval `[lo, hi]` in float endpoints, keeping
/// representable endpoints unchanged.
pub fn round_outward(lo: &BigRational, hi: &BigRational) -> Interval {
    assert!(lo <= hi, "round_outward: inverted rational interval");
    Interval::raw(rational_down(lo), rational_up(hi))
}

fn rational_down(r: &BigRational) -> f64 {
    let mut f = nearest_f64(r);
    if f == f64::INFINITY {
        return f64::MAX;
    }
    if f == f64::NEG_INFINITY {
        return f;
    }
    while exact(f) > *r {
        f = f.next_down();
        if f.is_infinite() {
            break;
        }
    }
    f
}

fn rational_up(r: &BigRational) -> f64 {
    let mut f = nearest_f64(r);
    if f == f64::NEG_INFINITY {
        return f64::MIN;
    }
    if f == f64::INFINITY {
        return f;
    }
    while exact(f) < *r {
        f = f.next_up();
        if f.is_infinite() {
            break;
        }
    }
    f
}

fn nearest_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        let q = n / d;
        if q.is_nan() {
            0.0
        } else {
            q
        }
    })
}

fn exact(f: f64) -> BigRational {
    BigRational::from_float(f).expect("finite float")
}

fn add(a: &Interval, b: &Interval) -> Interval {
    Interval::raw(round::add_down(a.lo, b.lo), round::add_up(a.hi, b.hi))
}

fn sub(a: &Interval, b: &Interval) -> Interval {
    Interval::raw(round::add_down(a.lo, -b.hi), round::add_up(a.hi, -b.lo))
}

fn neg(a: &Interval) -> Interval {
    Interval::raw(-a.hi, -a.lo)
}

fn mul(a: &Interval, b: &Interval) -> Interval {
    let pairs = [(a.lo, b.lo), (a.lo, b.hi), (a.hi, b.lo), (a.hi, b.hi)];
    let lo = pairs
        .iter()
        .map(|&(x, y)| round::mul_down(x, y))
        .fold(f64::INFINITY, f64::min);
    let hi = pairs
        .iter()
        .map(|&(x, y)| round::mul_up(x, y))
        .fold(f64::NEG_INFINITY, f64::max);
    Interval::raw(lo, hi)
}

fn div(a: &Interval, b: &Interval) -> Interval {
    if b.contains_zero() {
        return Interval::TOP;
    }
    let pairs = [(a.lo, b.lo), (a.lo, b.hi), (a.hi, b.lo), (a.hi, b.hi)];
    let lo = pairs
        .iter()
        .map(|&(x, y)| round::div_down(x, y))
        .fold(f64::INFINITY, f64::min);
    let hi = pairs
        .iter()
        .map(|&(x, y)| round::div_up(x, y))
        .fold(f64::NEG_INFINITY, f64::max);
    Interval::raw(lo, hi)
}

fn recip(a: &Interval) -> Interval {
    if a.contains_zero() {
        return Interval::TOP;
    }
    Interval::raw(round::div_down(1.0, a.hi), round::div_up(1.0, a.lo))
}

fn sqrt(a: &Interval) -> Result<Interval> {
    if a.hi < 0.0 {
        return Err(Error::Domain(format!("sqrt of negative interval {a}")));
    }
    let lo = a.lo.max(0.0);
    Ok(Interval::raw(round::sqrt_down(lo), round::sqrt_up(a.hi)))
}

fn pow_int(a: &Interval, k: u32) -> Interval {
    if k.is_multiple_of(2) {
        if a.lo >= 0.0 {
            Interval::raw(round::pow_down(a.lo, k), round::pow_up(a.hi, k))
        } else if a.hi <= 0.0 {
            Interval::raw(round::pow_down(-a.hi, k), round::pow_up(-a.lo, k))
        } else {
            Interval::raw(0.0, round::pow_up(a.hi.max(-a.lo), k))
        }
    } else {
        let lo = if a.lo >= 0.0 {
            round::pow_down(a.lo, k)
        } else {
            -round::pow_up(-a.lo, k)
        };
        let hi = if a.hi >= 0.0 {
            round::pow_up(a.hi, k)
        } else {
            -round::pow_down(-a.hi, k)
        };
        Interval::raw(lo, hi)
    }
}

/// Directed-rounding primitives. Every `*_down` result is `<=` the exact
/// real result and every `*_up` result is `>=` it. NaN (an indeterminate
/// form) becomes the infinity of the rounding direction.
mod round {
    /// Below this magnitude FMA residuals may underflow, so results are
    /// stepped unconditionally.
    const TINY: f64 = 1e-290;

    pub fn add_down(a: f64, b: f64) -> f64 {
        let s = a + b;
        if s.is_nan() {
            return f64::NEG_INFINITY;
        }
        if !a.is_finite() || !b.is_finite() {
            return s;
        }
        if s.is_infinite() {
            return if s > 0.0 { f64::MAX } else { s };
        }
        // TwoSum
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        if err < 0.0 {
            s.next_down()
        } else {
            s
        }
    }

    pub fn add_up(a: f64, b: f64) -> f64 {
        -add_down(-a, -b)
    }

    pub fn mul_down(a: f64, b: f64) -> f64 {
        let p = a * b;
        if p.is_nan() {
            return f64::NEG_INFINITY;
        }
        if !a.is_finite() || !b.is_finite() {
            return p;
        }
        if p.is_infinite() {
            return if p > 0.0 { f64::MAX } else { p };
        }
        if a == 0.0 || b == 0.0 {
            return p;
        }
        if p.abs() < TINY {
            return p.next_down();
        }
        let err = a.mul_add(b, -p);
        if err < 0.0 {
            p.next_down()
        } else {
            p
        }
    }

    pub fn mul_up(a: f64, b: f64) -> f64 {
        -mul_down(-a, b)
    }

    /// `b` must be nonzero.
    pub fn div_down(a: f64, b: f64) -> f64 {
        let q = a / b;
        if q.is_nan() {
            return f64::NEG_INFINITY;
        }
        if !a.is_finite() || !b.is_finite() {
            return q;
        }
        if q.is_infinite() {
            return if q > 0.0 { f64::MAX } else { q };
        }
        if a == 0.0 {
            return q;
        }
        if q.abs() < TINY || a.abs() < TINY {
            return q.next_down();
        }
        // a = q*b + r exactly; the true quotient is q + r/b.
        let r = (-q).mul_add(b, a);
        if r != 0.0 && (r > 0.0) != (b > 0.0) {
            q.next_down()
        } else {
            q
        }
    }

    pub fn div_up(a: f64, b: f64) -> f64 {
        -div_down(-a, b)
    }

    /// `a` must be `>= 0`.
    pub fn sqrt_down(a: f64) -> f64 {
        let s = a.sqrt();
        if a == 0.0 || a.is_infinite() {
            return s;
        }
        if a < TINY {
            return s.next_down().max(0.0);
        }
        let r = (-s).mul_add(s, a);
        if r < 0.0 {
            s.next_down()
        } else {
            s
        }
    }

    pub fn sqrt_up(a: f64) -> f64 {
        let s = a.sqrt();
        if a == 0.0 || a.is_infinite() {
            return s;
        }
        if a < TINY {
            return s.next_up();
        }
        let r = (-s).mul_add(s, a);
        if r > 0.0 {
            s.next_up()
        } else {
            s
        }
    }

    /// `a` must be `>= 0`; products of nonnegative values are monotone.
    pub fn pow_down(a: f64, k: u32) -> f64 {
        (1..k).fold(a, |acc, _| mul_down(acc, a))
    }

    pub fn pow_up(a: f64, k: u32) -> f64 {
        (1..k).fold(a, |acc, _| mul_up(acc, a))
    }

}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn constructor_rejects_bad_endpoints() {
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(Interval::new(f64::NAN, 0.0).is_err());
        assert!(Interval::new(f64::NEG_INFINITY, f64::INFINITY).unwrap().is_top());
    }

    #[test]
    fn dependency_problem_subtraction() {
        let x = iv(0.0, 1.0);
        assert_eq!(extend(OpKind::Sub, &[x, x]).unwrap(), iv(-1.0, 1.0));
    }

    #[test]
    fn additive_identity() {
        for a in [-3.5, 0.0, 1e300, 7.25] {
            let r = extend(OpKind::Add, &[iv(a, a), iv(0.0, 0.0)]).unwrap();
            assert_eq!(r, iv(a, a));
        }
    }

    #[test]
    fn mul_sq_recip_examples() {
        assert_eq!(
            extend(OpKind::Mul, &[iv(-1.0, 2.0), iv(3.0, 4.0)]).unwrap(),
            iv(-4.0, 8.0)
        );
        assert_eq!(extend(OpKind::Sq, &[iv(-1.0, 1.0)]).unwrap(), iv(0.0, 1.0));
        assert_eq!(
            extend(OpKind::Mul, &[iv(-1.0, 1.0), iv(-1.0, 1.0)]).unwrap(),
            iv(-1.0, 1.0)
        );
        assert_eq!(extend(OpKind::Recip, &[iv(1.0, 2.0)]).unwrap(), iv(0.5, 1.0));
    }

    #[test]
    fn division_by_zero_straddle_is_top() {
        let r = extend(OpKind::Div, &[iv(1.0, 2.0), iv(-1.0, 1.0)]).unwrap();
        assert!(r.is_top());
        assert!(extend(OpKind::Recip, &[iv(0.0, 2.0)]).unwrap().is_top());
    }

    #[test]
    fn sqrt_domain_handling() {
        assert_eq!(extend(OpKind::Sqrt, &[iv(-1.0, 4.0)]).unwrap(), iv(0.0, 2.0));
        assert!(matches!(
            extend(OpKind::Sqrt, &[iv(-2.0, -1.0)]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn odd_and_even_powers() {
        assert_eq!(
            extend(OpKind::PowInt(3), &[iv(-2.0, 1.0)]).unwrap(),
            iv(-8.0, 1.0)
        );
        assert_eq!(
            extend(OpKind::PowInt(4), &[iv(-2.0, 1.0)]).unwrap(),
            iv(0.0, 16.0)
        );
        assert_eq!(
            extend(OpKind::PowInt(2), &[iv(-3.0, -2.0)]).unwrap(),
            iv(4.0, 9.0)
        );
        assert!(extend(OpKind::PowInt(1), &[iv(1.0, 2.0)]).is_err());
    }

    #[test]
    fn arity_is_checked() {
        assert!(matches!(
            extend(OpKind::Add, &[iv(0.0, 1.0)]),
            Err(Error::Arity { expected: 2, found: 1, .. })
        ));
        assert!(extend(OpKind::Const, &[]).is_err());
    }

    #[test]
    fn meet_examples() {
        assert_eq!(meet(&iv(-1.0, 1.0), &iv(0.0, 0.0)).unwrap(), iv(0.0, 0.0));
        let folded = [iv(-3.0, 1.0 / 3.0), iv(-2.0, 0.0), iv(-1.0, 1.0)]
            .iter()
            .try_fold(Interval::TOP, |acc, x| meet(&acc, x))
            .unwrap();
        assert_eq!(folded, iv(-1.0, 0.0));
        let a = iv(0.25, 0.75);
        assert_eq!(meet(&a, &Interval::TOP).unwrap(), a);
        assert!(matches!(
            meet(&iv(0.0, 1.0), &iv(2.0, 3.0)),
            Err(Error::EmptyMeet { .. })
        ));
    }

    #[test]
    fn width_examples() {
        assert_eq!(width(&iv(0.0, 1.0)), 1.0);
        assert_eq!(width(&iv(-4.5, 0.0)), 4.5);
        assert_eq!(width(&iv(3.0, 3.0)), 0.0);
        assert_eq!(width(&iv(0.0, f64::INFINITY)), f64::INFINITY);
    }

    #[test]
    fn round_outward_examples() {
        let half = ratio(1, 2);
        assert_eq!(round_outward(&half, &half), iv(0.5, 0.5));

        let third = ratio(1, 3);
        let r = round_outward(&third, &third);
        assert!(exact(r.lo()) < third && third < exact(r.hi()));
        assert!(r.lo().next_up().next_up() >= r.hi());

        let r = round_outward(&ratio(-1, 3), &ratio(2, 3));
        assert!(exact(r.lo()) <= ratio(-1, 3));
        assert!(exact(r.hi()) >= ratio(2, 3));
    }

    #[test]
    fn round_outward_huge_values() {
        let big = BigRational::from_integer(BigInt::from(10).pow(400));
        let r = round_outward(&big, &big);
        assert_eq!(r.lo(), f64::MAX);
        assert_eq!(r.hi(), f64::INFINITY);
    }

    #[test]
    fn contains_examples() {
        assert!(iv(-1.0, 0.0).contains(-0.5));
        assert!(iv(0.0, 0.0).contains(0.0));
        assert!(!iv(0.25, 0.75).contains(0.9));
    }

    #[test]
    fn negative_zero_is_normalized() {
        let r = extend(OpKind::Neg, &[iv(0.0, 1.0)]).unwrap();
        assert!(r.hi().is_sign_positive());
    }
}
