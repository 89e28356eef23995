//! Interval e-class analysis.
//!
//! Each e-node is interpreted by the natural interval extension of its
//! operator over its children's class intervals; each class interval is the
//! meet of the interpretations of its nodes. Both are maintained
//! incrementally by the e-graph: `make` on insertion, `merge_data` on union,
//! and worklist repropagation to parents when an interval narrows.

use crate::egraph::{ClassId, EGraph, ENode};
use crate::error::{Error, Result};
use crate::expr::{DomainEnv, Rational};
use crate::interval::{extend, meet, round_outward, Interval};

/// Interval of a single e-node given the intervals of its child classes.
pub fn make(node: &ENode, child_data: &[Interval], env: &DomainEnv) -> Result<Interval> {
    match node {
        ENode::Const(r) => Ok(round_outward(r, r)),
        ENode::Var(s) => env
            .get(s.as_str())
            .ok_or_else(|| Error::UnboundVariable(s.to_string())),
        ENode::Op(op, _) => extend(*op, child_data),
    }
}

/// Combines the intervals of two classes being unioned.
pub fn merge_data(a: &Interval, b: &Interval) -> Result<Interval> {
    meet(a, b)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PropagateStats {
    /// Nodes initially queued for reinterpretation.
    pub queued: usize,
    /// Repairs performed while reaching the fixpoint.
    pub repairs: usize,
}

/// Reinterprets every node and iterates to the fixpoint. Intervals only
/// ever narrow; cyclic graphs terminate because float narrowing chains are
/// finite.
pub fn propagate(g: &mut EGraph) -> Result<PropagateStats> {
    let queued = g.enqueue_all_for_analysis();
    let repairs = g.rebuild()?;
    Ok(PropagateStats { queued, repairs })
}

/// Materializes the constant of a class whose interval collapsed to a
/// single float. Never removes nodes and never changes the class interval.
pub fn modify(g: &mut EGraph, class: ClassId) -> Result<Option<ENode>> {
    let class = g.find(class);
    let data = g.data(class);
    if !data.is_degenerate() || !data.lo().is_finite() {
        return Ok(None);
    }
    if g.class(class)
        .nodes()
        .iter()
        .any(|n| matches!(n, ENode::Const(_)))
    {
        return Ok(None);
    }
    let value = Rational::from_float(data.lo()).expect("finite float");
    let node = ENode::Const(value);
    let id = g.add(node.clone());
    g.union(class, id)?;
    Ok(Some(node))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::interval::OpKind;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn make_examples() {
        let env = DomainEnv::new().with("x", iv(0.0, 1.0));
        let mut g = EGraph::new(env.clone());
        let x = g.add(ENode::Var("x".into()));
        let sub = ENode::binary(OpKind::Sub, x, x);
        assert_eq!(make(&sub, &[g.data(x), g.data(x)], &env).unwrap(), iv(-1.0, 1.0));
        let one = ENode::Const(Rational::from_integer(1.into()));
        assert_eq!(make(&one, &[], &env).unwrap(), iv(1.0, 1.0));
        let recip = ENode::unary(OpKind::Recip, x);
        assert_eq!(make(&recip, &[iv(1.0, 2.0)], &env).unwrap(), iv(0.5, 1.0));
        let var = ENode::Var("y".into());
        assert!(make(&var, &[], &env).is_err());
    }

    #[test]
    fn merge_examples() {
        assert_eq!(merge_data(&iv(-1.0, 1.0), &iv(0.0, 0.0)).unwrap(), iv(0.0, 0.0));
        let first = merge_data(&iv(-3.0, 1.0 / 3.0), &iv(-2.0, 0.0)).unwrap();
        assert_eq!(merge_data(&first, &iv(-1.0, 1.0)).unwrap(), iv(-1.0, 0.0));
        let a = iv(0.25, 0.5);
        assert_eq!(merge_data(&a, &a).unwrap(), a);
    }

    #[test]
    fn propagate_figure_graph() {
        // y/(1+y) and 1/(1+1/y) in one class, y in [1,2]
        let env = DomainEnv::new().with("y", iv(1.0, 2.0));
        let mut g = EGraph::new(env);
        let a = g.add_expr(&parse("(/ y (+ 1 y))").unwrap()).unwrap();
        let initial = g.data(a);
        assert!(initial.lo() <= 1.0 / 3.0 && initial.lo().next_up() >= 1.0 / 3.0);
        assert_eq!(initial.hi(), 1.0);
        let b = g.add_expr(&parse("(recip (+ 1 (recip y)))").unwrap()).unwrap();
        g.union(a, b).unwrap();
        propagate(&mut g).unwrap();
        let root = g.data(a);
        assert_eq!(root.lo(), 0.5);
        assert!(root.contains(2.0 / 3.0) && root.hi() <= (2.0f64 / 3.0).next_up());
    }

    #[test]
    fn propagate_matches_natural_extension_on_trees() {
        let env = DomainEnv::new().with("x", iv(1.0, 2.0)).with("y", iv(-1.0, 3.0));
        let e = parse("(- (* x (sqrt (+ y 1))) (/ 3 x))").unwrap();
        let mut g = EGraph::new(env.clone());
        let root = g.add_expr(&e).unwrap();
        let stats = propagate(&mut g).unwrap();
        assert_eq!(stats.repairs, 0);
        assert_eq!(g.data(root), crate::expr::natural_extension(&e, &env).unwrap());
    }

    #[test]
    fn modify_skips_non_degenerate() {
        let env = DomainEnv::new().with("x", iv(1.0 / 3.0, 0.34));
        let mut g = EGraph::new(env);
        let x = g.add_expr(&parse("x").unwrap()).unwrap();
        assert_eq!(modify(&mut g, x).unwrap(), None);
    }

    #[test]
    fn modify_adds_constant_to_cancelled_class() {
        let env = DomainEnv::new().with("x", iv(0.0, 1.0));
        let mut g = EGraph::new(env);
        let d = g.add_expr(&parse("(- x x)").unwrap()).unwrap();
        let z = g.add(ENode::Op(OpKind::Mul, [d, d].into_iter().collect()));
        g.rebuild().unwrap();
        // force the class to [0,0] via a union with a fresh zero-valued term
        let zero_term = g.add_expr(&parse("(* 0 x)").unwrap()).unwrap();
        g.union(d, zero_term).unwrap();
        g.rebuild().unwrap();
        let zero = ENode::Const(Rational::from_integer(0.into()));
        assert!(g.class(d).nodes().contains(&zero));
        assert_eq!(g.data(z), iv(0.0, 0.0));
    }
}
