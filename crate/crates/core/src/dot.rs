//! Graphviz rendering of an e-graph: one cluster per class labelled with its
//! interval, one box per node, and edges from nodes to child clusters.

use std::fmt::Write;

use crate::egraph::{ClassId, EGraph, ENode};
use crate::expr::format_rational;

pub fn to_dot(g: &EGraph, root: Option<ClassId>) -> String {
    let root = root.map(|r| g.find(r));
    let mut out = String::new();
    out.push_str("digraph egraph {\n");
    out.push_str("  compound=true;\n  clusterrank=local;\n");
    out.push_str("  node [shape=box, fontname=\"monospace\"];\n");
    for class in g.classes() {
        let id = class.id().index();
        let _ = writeln!(out, "  subgraph cluster_{id} {{");
        let style = if Some(class.id()) == root {
            "style=\"rounded,bold\"; color=blue"
        } else {
            "style=rounded"
        };
        let _ = writeln!(out, "    {style};");
        let _ = writeln!(out, "    label=\"{} {}\";", class.id(), escape(&class.data().to_string()));
        for (i, node) in class.nodes().iter().enumerate() {
            let _ = writeln!(out, "    n{id}_{i} [label=\"{}\"];", escape(&node_label(node)));
        }
        out.push_str("  }\n");
    }
    for class in g.classes() {
        let id = class.id().index();
        for (i, node) in class.nodes().iter().enumerate() {
            for (k, &child) in node.children().iter().enumerate() {
                let child = g.find(child).index();
                let _ = writeln!(
                    out,
                    "  n{id}_{i} -> n{child}_0 [lhead=cluster_{child}, label=\"{k}\"];"
                );
            }
        }
    }
    out.push_str("}\n");
    out
}

fn node_label(node: &ENode) -> String {
    match node {
        ENode::Const(r) => format_rational(r),
        ENode::Var(s) => s.to_string(),
        ENode::Op(op, _) => op.to_string(),
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
