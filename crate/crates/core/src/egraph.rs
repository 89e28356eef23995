//! Hashconsed e-graph with union-find, deferred congruence repair, and an
//! interval analysis attached to every e-class.

use std::fmt;

use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::analysis;
use crate::error::{Error, Result};
use crate::expr::{DomainEnv, Expr, Rational, Symbol};
use crate::interval::{meet, Interval, OpKind};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ClassId(u32);

impl ClassId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// The id with the given index; valid for a graph when the index is
    /// below [`EGraph::id_bound`].
    pub fn from_index(index: usize) -> ClassId {
        ClassId(u32::try_from(index).expect("class index fits in u32"))
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

pub type Children = SmallVec<[ClassId; 2]>;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum ENode {
    Const(Rational),
    Var(Symbol),
    Op(OpKind, Children),
}

impl ENode {
    pub fn op(&self) -> OpKind {
        match self {
            ENode::Const(_) => OpKind::Const,
            ENode::Var(_) => OpKind::Var,
            ENode::Op(op, _) => *op,
        }
    }

    pub fn children(&self) -> &[ClassId] {
        match self {
            ENode::Op(_, c) => c,
            _ => &[],
        }
    }

    pub fn binary(op: OpKind, a: ClassId, b: ClassId) -> ENode {
        ENode::Op(op, SmallVec::from_slice(&[a, b]))
    }

    pub fn unary(op: OpKind, a: ClassId) -> ENode {
        ENode::Op(op, SmallVec::from_slice(&[a]))
    }

    pub fn map_children(&self, mut f: impl FnMut(ClassId) -> ClassId) -> ENode {
        match self {
            ENode::Op(op, c) => ENode::Op(*op, c.iter().map(|&id| f(id)).collect()),
            leaf => leaf.clone(),
        }
    }
}

impl fmt::Display for ENode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ENode::Const(r) => write!(f, "{}", crate::expr::format_rational(r)),
            ENode::Var(s) => write!(f, "{s}"),
            ENode::Op(OpKind::PowInt(k), c) => write!(f, "(pow {} {k})", c[0]),
            ENode::Op(op, c) => {
                write!(f, "({op}")?;
                for id in c {
                    write!(f, " {id}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct EClass {
    id: ClassId,
    nodes: Vec<ENode>,
    data: Interval,
    parents: Vec<(ENode, ClassId)>,
}

impl EClass {
    pub fn id(&self) -> ClassId {
        self.id
    }

    pub fn nodes(&self) -> &[ENode] {
        &self.nodes
    }

    /// The class interval.
    pub fn data(&self) -> Interval {
        self.data
    }

    pub fn parents(&self) -> &[(ENode, ClassId)] {
        &self.parents
    }
}

#[derive(Clone, Debug)]
pub struct EGraph {
    env: DomainEnv,
    unionfind: Vec<ClassId>,
    memo: FxHashMap<ENode, ClassId>,
    classes: Vec<Option<EClass>>,
    pending: Vec<(ENode, ClassId)>,
    analysis_pending: Vec<(ENode, ClassId)>,
    modify_pending: Vec<ClassId>,
    version: u64,
}

impl EGraph {
    pub fn new(env: DomainEnv) -> Self {
        EGraph {
            env,
            unionfind: Vec::new(),
            memo: FxHashMap::default(),
            classes: Vec::new(),
            pending: Vec::new(),
            analysis_pending: Vec::new(),
            modify_pending: Vec::new(),
            version: 0,
        }
    }

    pub fn env(&self) -> &DomainEnv {
        &self.env
    }

    /// Counter bumped on every new node, union, or interval change.
    pub fn version(&self) -> u64 {
        self.version
    }

    /// True when no repair or repropagation work is outstanding.
    pub fn is_clean(&self) -> bool {
        self.pending.is_empty() && self.analysis_pending.is_empty() && self.modify_pending.is_empty()
    }

    pub fn find(&self, mut id: ClassId) -> ClassId {
        while self.unionfind[id.index()] != id {
            id = self.unionfind[id.index()];
        }
        id
    }

    fn find_mut(&mut self, id: ClassId) -> ClassId {
        let root = self.find(id);
        let mut cur = id;
        while self.unionfind[cur.index()] != root {
            let next = self.unionfind[cur.index()];
            self.unionfind[cur.index()] = root;
            cur = next;
        }
        root
    }

    pub fn canonicalize(&self, node: &ENode) -> ENode {
        node.map_children(|id| self.find(id))
    }

    /// The canonical class holding `node`, if any.
    pub fn lookup(&self, node: &ENode) -> Option<ClassId> {
        self.memo.get(&self.canonicalize(node)).map(|&id| self.find(id))
    }

    pub fn class(&self, id: ClassId) -> &EClass {
        let id = self.find(id);
        self.classes[id.index()].as_ref().expect("canonical class exists")
    }

    fn class_mut(&mut self, id: ClassId) -> &mut EClass {
        let id = self.find(id);
        self.classes[id.index()].as_mut().expect("canonical class exists")
    }

    pub fn data(&self, id: ClassId) -> Interval {
        self.class(id).data
    }

    /// Canonical classes in id order.
    pub fn classes(&self) -> impl Iterator<Item = &EClass> {
        self.classes.iter().flatten()
    }

    pub fn number_of_classes(&self) -> usize {
        self.classes().count()
    }

    pub fn total_number_of_nodes(&self) -> usize {
        self.classes().map(|c| c.nodes.len()).sum()
    }

    /// Upper bound on the node count that is cheap to read mid-iteration.
    pub fn approx_node_count(&self) -> usize {
        self.memo.len()
    }

    /// Total ids ever allocated, including merged-away ones.
    pub fn id_bound(&self) -> usize {
        self.unionfind.len()
    }

    /// Interval of a node computed from the current child class intervals.
    /// Nodes that are undefined on the whole box contribute no information.
    pub(crate) fn node_interval(&self, node: &ENode) -> Interval {
        let child_data: SmallVec<[Interval; 2]> =
            node.children().iter().map(|&c| self.data(c)).collect();
        analysis::make(node, &child_data, &self.env).unwrap_or(Interval::TOP)
    }

    /// Hashconsed insertion. Returns the existing class of a congruent node
    /// if there is one.
    pub fn add(&mut self, node: ENode) -> ClassId {
        let node = self.canonicalize(&node);
        if let Some(&existing) = self.memo.get(&node) {
            return self.find(existing);
        }
        let id = ClassId(self.unionfind.len() as u32);
        self.unionfind.push(id);
        let data = self.node_interval(&node);
        for &child in node.children() {
            self.class_mut(child).parents.push((node.clone(), id));
        }
        self.classes.push(Some(EClass {
            id,
            nodes: vec![node.clone()],
            data,
            parents: Vec::new(),
        }));
        self.memo.insert(node, id);
        if data.is_degenerate() {
            self.modify_pending.push(id);
        }
        self.version += 1;
        id
    }

    /// Inserts every subterm of `e` bottom-up and returns the root class.
    pub fn add_expr(&mut self, e: &Expr) -> Result<ClassId> {
        self.env.check_covers(e)?;
        crate::expr::natural_extension(e, &self.env)?;
        Ok(self.add_expr_unchecked(e))
    }

    fn add_expr_unchecked(&mut self, e: &Expr) -> ClassId {
        let node = match e {
            Expr::Const(r) => ENode::Const(r.clone()),
            Expr::Var(s) => ENode::Var(s.clone()),
            Expr::Op(op, children) => ENode::Op(
                *op,
                children.iter().map(|c| self.add_expr_unchecked(c)).collect(),
            ),
        };
        self.add(node)
    }

    /// Merges two classes; the merged interval is the meet of both.
    pub fn union(&mut self, a: ClassId, b: ClassId) -> Result<ClassId> {
        let a = self.find_mut(a);
        let b = self.find_mut(b);
        if a == b {
            return Ok(a);
        }
        let data_a = self.class(a).data;
        let data_b = self.class(b).data;
        let merged = analysis::merge_data(&data_a, &data_b).map_err(|e| match e {
            Error::EmptyMeet { a, b: bb, rule, .. } => Error::EmptyMeet {
                a,
                b: bb,
                class: Some(b),
                rule,
            },
            other => other,
        })?;

        // merge the class with fewer parents into the other
        let (root, child) = if self.class(a).parents.len() >= self.class(b).parents.len() {
            (a, b)
        } else {
            (b, a)
        };
        let child_class = self.classes[child.index()].take().expect("canonical");
        self.unionfind[child.index()] = root;

        if merged != data_a || merged != data_b {
            let root_data = if root == a { data_a } else { data_b };
            if merged != root_data {
                let parents = self.class(root).parents.clone();
                self.analysis_pending.extend(parents);
            }
            if merged != child_class.data {
                self.analysis_pending.extend(child_class.parents.iter().cloned());
            }
            self.modify_pending.push(root);
        }
        self.pending.extend(child_class.parents.iter().cloned());

        let root_class = self.class_mut(root);
        root_class.data = merged;
        root_class.nodes.extend(child_class.nodes);
        root_class.parents.extend(child_class.parents);
        self.version += 1;
        Ok(root)
    }

    /// Queues every node for interval recomputation.
    pub(crate) fn enqueue_all_for_analysis(&mut self) -> usize {
        let mut work = Vec::new();
        for class in self.classes() {
            for node in &class.nodes {
                work.push((node.clone(), class.id));
            }
        }
        let n = work.len();
        self.analysis_pending.extend(work);
        n
    }

    /// Restores congruence closure and brings every class interval to the
    /// fixpoint of node interpretation plus meet. Returns the number of
    /// repairs (congruence unions and interval changes) performed.
    pub fn rebuild(&mut self) -> Result<usize> {
        let mut repairs = 0;
        loop {
            if let Some((node, class)) = self.pending.pop() {
                self.memo.remove(&node);
                let canon = self.canonicalize(&node);
                let class = self.find_mut(class);
                if let Some(old) = self.memo.insert(canon, class) {
                    if self.find(old) != class {
                        self.union(old, class)?;
                        repairs += 1;
                    }
                }
                continue;
            }
            if let Some((node, class)) = self.analysis_pending.pop() {
                let class = self.find_mut(class);
                let computed = self.node_interval(&node);
                let old = self.data(class);
                let new = meet(&old, &computed).map_err(|e| match e {
                    Error::EmptyMeet { a, b, rule, .. } => Error::EmptyMeet {
                        a,
                        b,
                        class: Some(class),
                        rule,
                    },
                    other => other,
                })?;
                if new != old {
                    let c = self.class_mut(class);
                    c.data = new;
                    let parents = c.parents.clone();
                    self.analysis_pending.extend(parents);
                    self.modify_pending.push(class);
                    self.version += 1;
                    repairs += 1;
                }
                continue;
            }
            if let Some(class) = self.modify_pending.pop() {
                analysis::modify(self, class)?;
                continue;
            }
            break;
        }
        self.rebuild_classes();
        Ok(repairs)
    }

    fn rebuild_classes(&mut self) {
        let uf = &self.unionfind;
        let find = |mut id: ClassId| {
            while uf[id.index()] != id {
                id = uf[id.index()];
            }
            id
        };
        for class in self.classes.iter_mut().flatten() {
            for node in class.nodes.iter_mut() {
                *node = node.map_children(find);
            }
            class.nodes.sort_unstable();
            class.nodes.dedup();
            for (node, pid) in class.parents.iter_mut() {
                *node = node.map_children(find);
                *pid = find(*pid);
            }
            class.parents.sort_unstable();
            class.parents.dedup();
        }
    }

    /// Pairs of distinct canonical classes that hold congruent nodes, plus
    /// nodes whose hashcons entry points elsewhere. Empty after `rebuild`.
    pub fn congruence_violations(&self) -> Vec<String> {
        let mut seen: FxHashMap<ENode, ClassId> = FxHashMap::default();
        let mut out = Vec::new();
        for class in self.classes() {
            for node in &class.nodes {
                let canon = self.canonicalize(node);
                if let Some(&other) = seen.get(&canon) {
                    if other != class.id {
                        out.push(format!("{canon} in both {other} and {}", class.id));
                    }
                } else {
                    seen.insert(canon.clone(), class.id);
                }
                match self.memo.get(&canon) {
                    Some(&id) if self.find(id) == class.id => {}
                    Some(&id) => out.push(format!(
                        "hashcons maps {canon} to {} but it lives in {}",
                        self.find(id),
                        class.id
                    )),
                    None => out.push(format!("{canon} missing from hashcons")),
                }
            }
        }
        out
    }
}
