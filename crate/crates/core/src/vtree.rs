//! Vtrees: ordered full binary trees over variables.
//!
//! Node IDs are assigned by a preorder traversal starting at 1, so for an
//! internal node `v` with left-subtree leaf count `L`:
//! `ID(left(v)) = ID(v) + 1` and `ID(right(v)) = ID(v) + 2 * L`.
//! ID 0 is reserved as a sentinel for constants; it behaves as a right
//! descendant of every node.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// 1-based variable index.
pub type Var = u32;
/// 1-based preorder vtree node id; 0 is the constant sentinel.
pub type NodeId = u32;

/// Offset value standing in for "no vtree node" (constants).
pub const SENTINEL: NodeId = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Leaf(Var),
    Internal { left: NodeId, right: NodeId },
}

#[derive(Debug, Clone, Copy)]
pub struct VtreeNode {
    pub kind: NodeKind,
    /// Parent id, 0 for the root.
    pub parent: NodeId,
}

/// Relation of a node to a (potential) ancestor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Equal,
    Unrelated,
}

/// Tree shape used for construction and parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shape {
    Leaf(Var),
    Node(Box<Shape>, Box<Shape>),
}

impl Shape {
    pub fn node(l: Shape, r: Shape) -> Shape {
        Shape::Node(Box::new(l), Box::new(r))
    }

    fn leaf_count(&self) -> usize {
        match self {
            Shape::Leaf(_) => 1,
            Shape::Node(l, r) => l.leaf_count() + r.leaf_count(),
        }
    }
}

#[derive(Debug)]
pub struct Vtree {
    /// Indexed by node id; slot 0 is unused.
    nodes: Vec<VtreeNode>,
    num_vars: u32,
    /// Variable -> leaf node id (slot 0 unused).
    leaf_of: Vec<NodeId>,
    /// Node id -> number of leaves in its subtree (slot 0 unused).
    leaf_count: Vec<u32>,
    /// Node id -> isomorphism-class representative id.
    iso: Vec<NodeId>,
    // Euler tour LCA index.
    euler: Vec<NodeId>,
    depth: Vec<u32>,
    first: Vec<usize>,
    sparse: Vec<Vec<usize>>,
}

impl Vtree {
    /// Balanced vtree: the left half gets the first `ceil(M/2)` variables.
    pub fn build_balanced(vars: &[Var]) -> Result<Vtree> {
        fn split(vars: &[Var]) -> Shape {
            match vars {
                [v] => Shape::Leaf(*v),
                _ => {
                    let mid = vars.len().div_ceil(2);
                    Shape::node(split(&vars[..mid]), split(&vars[mid..]))
                }
            }
        }
        if vars.is_empty() {
            return Err(Error::InvalidInput("empty variable list".into()));
        }
        Vtree::from_shape(&split(vars))
    }

    /// Right-linear vtree: every internal node's left child is a leaf.
    pub fn build_right_linear(vars: &[Var]) -> Result<Vtree> {
        fn chain(vars: &[Var]) -> Shape {
            match vars {
                [v] => Shape::Leaf(*v),
                [v, rest @ ..] => Shape::node(Shape::Leaf(*v), chain(rest)),
                [] => unreachable!(),
            }
        }
        if vars.is_empty() {
            return Err(Error::InvalidInput("empty variable list".into()));
        }
        Vtree::from_shape(&chain(vars))
    }

    /// Builds a vtree from an explicit shape, assigning preorder ids.
    /// Leaf variables must form a bijection with 1..=M.
    pub fn from_shape(shape: &Shape) -> Result<Vtree> {
        let m = shape.leaf_count();
        let n_nodes = 2 * m - 1;
        let mut nodes = vec![
            VtreeNode {
                kind: NodeKind::Leaf(0),
                parent: 0
            };
            n_nodes + 1
        ];
        let mut leaf_count = vec![0u32; n_nodes + 1];
        let mut leaf_of = vec![0 as NodeId; m + 1];

        fn assign(
            shape: &Shape,
            parent: NodeId,
            next: &mut NodeId,
            nodes: &mut [VtreeNode],
            leaf_count: &mut [u32],
            leaf_of: &mut [NodeId],
        ) -> Result<NodeId> {
            let id = *next;
            *next += 1;
            match shape {
                Shape::Leaf(v) => {
                    let v = *v;
                    if v == 0 || v as usize >= leaf_of.len() {
                        return Err(Error::InvalidInput(format!(
                            "leaf variable {v} out of range 1..={}",
                            leaf_of.len() - 1
                        )));
                    }
                    if leaf_of[v as usize] != 0 {
                        return Err(Error::InvalidInput(format!("duplicate leaf variable {v}")));
                    }
                    leaf_of[v as usize] = id;
                    nodes[id as usize] = VtreeNode {
                        kind: NodeKind::Leaf(v),
                        parent,
                    };
                    leaf_count[id as usize] = 1;
                }
                Shape::Node(l, r) => {
                    let left = assign(l, id, next, nodes, leaf_count, leaf_of)?;
                    let right = assign(r, id, next, nodes, leaf_count, leaf_of)?;
                    nodes[id as usize] = VtreeNode {
                        kind: NodeKind::Internal { left, right },
                        parent,
                    };
                    leaf_count[id as usize] =
                        leaf_count[left as usize] + leaf_count[right as usize];
                }
            }
            Ok(id)
        }

        let mut next: NodeId = 1;
        assign(shape, 0, &mut next, &mut nodes, &mut leaf_count, &mut leaf_of)?;
        debug_assert_eq!(next as usize, n_nodes + 1);

        let iso = compute_iso_classes(&nodes, n_nodes);
        let (euler, depth, first, sparse) = build_lca_index(&nodes, n_nodes);

        Ok(Vtree {
            nodes,
            num_vars: m as u32,
            leaf_of,
            leaf_count,
            iso,
            euler,
            depth,
            first,
            sparse,
        })
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    /// Number of vtree nodes (2M - 1).
    pub fn num_nodes(&self) -> u32 {
        (self.nodes.len() - 1) as u32
    }

    pub fn root(&self) -> NodeId {
        1
    }

    fn check_id(&self, id: NodeId) -> Result<()> {
        if id == 0 || id as usize >= self.nodes.len() {
            Err(Error::InvalidId(id))
        } else {
            Ok(())
        }
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id as usize].kind
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        matches!(self.nodes[id as usize].kind, NodeKind::Leaf(_))
    }

    pub fn parent(&self, id: NodeId) -> NodeId {
        self.nodes[id as usize].parent
    }

    pub fn left(&self, id: NodeId) -> NodeId {
        match self.nodes[id as usize].kind {
            NodeKind::Internal { left, .. } => left,
            NodeKind::Leaf(_) => panic!("left child of leaf {id}"),
        }
    }

    pub fn right(&self, id: NodeId) -> NodeId {
        match self.nodes[id as usize].kind {
            NodeKind::Internal { right, .. } => right,
            NodeKind::Leaf(_) => panic!("right child of leaf {id}"),
        }
    }

    /// Leaf node id of a variable.
    pub fn leaf_of(&self, var: Var) -> Result<NodeId> {
        if var == 0 || var > self.num_vars {
            return Err(Error::UnknownVariable(var));
        }
        Ok(self.leaf_of[var as usize])
    }

    /// Variable of a leaf node.
    pub fn var_of(&self, id: NodeId) -> Option<Var> {
        match self.nodes[id as usize].kind {
            NodeKind::Leaf(v) => Some(v),
            NodeKind::Internal { .. } => None,
        }
    }

    /// Leaf count of the subtree rooted at `id`.
    pub fn leaves(&self, id: NodeId) -> u32 {
        self.leaf_count[id as usize]
    }

    /// Last preorder id inside the subtree rooted at `id`.
    pub fn subtree_end(&self, id: NodeId) -> NodeId {
        id + 2 * self.leaf_count[id as usize] - 2
    }

    /// Variables of the subtree rooted at `id`, in leaf preorder.
    pub fn subtree_vars(&self, id: NodeId) -> Vec<Var> {
        (id..=self.subtree_end(id))
            .filter_map(|n| self.var_of(n))
            .collect()
    }

    /// Shape-isomorphism class representative `e(w)`: the minimum preorder id
    /// among nodes whose subtree has the same shape as `w`'s.
    pub fn iso_class(&self, w: NodeId) -> Result<NodeId> {
        self.check_id(w)?;
        Ok(self.iso[w as usize])
    }

    /// `ID(w) - ID(u)` when the subtrees of `u` and `w` are isomorphic.
    pub fn shift_delta(&self, u: NodeId, w: NodeId) -> Result<Option<i64>> {
        self.check_id(u)?;
        self.check_id(w)?;
        if self.iso[u as usize] == self.iso[w as usize] {
            Ok(Some(w as i64 - u as i64))
        } else {
            Ok(None)
        }
    }

    /// Lowest common ancestor. The sentinel 0 acts as a right descendant of
    /// every node, so `lca(0, w) = w` and `lca(0, 0) = 0`.
    pub fn lca(&self, u: NodeId, w: NodeId) -> Result<NodeId> {
        if u != 0 {
            self.check_id(u)?;
        }
        if w != 0 {
            self.check_id(w)?;
        }
        if u == 0 {
            return Ok(w);
        }
        if w == 0 {
            return Ok(u);
        }
        let (mut i, mut j) = (self.first[u as usize], self.first[w as usize]);
        if i > j {
            std::mem::swap(&mut i, &mut j);
        }
        Ok(self.euler[self.range_min(i, j)])
    }

    fn range_min(&self, lo: usize, hi: usize) -> usize {
        // Inclusive range over euler positions.
        let k = usize::ilog2(hi - lo + 1) as usize;
        let a = self.sparse[k][lo];
        let b = self.sparse[k][hi + 1 - (1 << k)];
        if self.depth[self.euler[a] as usize] <= self.depth[self.euler[b] as usize] {
            a
        } else {
            b
        }
    }

    /// Classifies `desc` relative to `anc`. The sentinel 0 is a right
    /// descendant of any node.
    pub fn descendant_side(&self, anc: NodeId, desc: NodeId) -> Result<Side> {
        self.check_id(anc)?;
        if desc == 0 {
            return Ok(Side::Right);
        }
        self.check_id(desc)?;
        if anc == desc {
            return Ok(Side::Equal);
        }
        match self.nodes[anc as usize].kind {
            NodeKind::Leaf(_) => Ok(Side::Unrelated),
            NodeKind::Internal { right, .. } => {
                if anc < desc && desc < right {
                    Ok(Side::Left)
                } else if desc >= right && desc <= self.subtree_end(anc) {
                    Ok(Side::Right)
                } else {
                    Ok(Side::Unrelated)
                }
            }
        }
    }

    /// Shape of the subtree rooted at `id`, with leaf labels.
    pub fn shape_of(&self, id: NodeId) -> Shape {
        match self.nodes[id as usize].kind {
            NodeKind::Leaf(v) => Shape::Leaf(v),
            NodeKind::Internal { left, right } => {
                Shape::node(self.shape_of(left), self.shape_of(right))
            }
        }
    }

    /// Emits the textual format: `vtree <n>` header, then `L <id> <var>` and
    /// `I <id> <left> <right>` lines with children before parents.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "vtree {}", self.num_nodes());
        // Post-order so children appear before their parent.
        fn walk(t: &Vtree, id: NodeId, out: &mut String) {
            match t.kind(id) {
                NodeKind::Leaf(v) => {
                    let _ = writeln!(out, "L {id} {v}");
                }
                NodeKind::Internal { left, right } => {
                    walk(t, left, out);
                    walk(t, right, out);
                    let _ = writeln!(out, "I {id} {left} {right}");
                }
            }
        }
        walk(self, self.root(), &mut out);
        out
    }

    /// Parses the textual format. External node ids are only used to wire up
    /// the tree; preorder ids are reassigned internally.
    pub fn parse(text: &str) -> Result<Vtree> {
        enum Raw {
            Leaf(Var),
            Internal(u64, u64),
        }
        let mut declared: Option<u64> = None;
        let mut raw: HashMap<u64, Raw> = HashMap::new();
        let mut referenced: Vec<u64> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            let mut it = line.split_whitespace();
            match it.next() {
                Some("vtree") => {
                    if declared.is_some() {
                        return Err(Error::parse(lineno, "duplicate vtree header"));
                    }
                    let n = it
                        .next()
                        .and_then(|t| t.parse::<u64>().ok())
                        .ok_or_else(|| Error::parse(lineno, "malformed vtree header"))?;
                    declared = Some(n);
                }
                Some("L") => {
                    let id = parse_u64(it.next(), lineno, "leaf id")?;
                    let var = parse_u64(it.next(), lineno, "leaf variable")?;
                    raw.insert(id, Raw::Leaf(var as Var));
                }
                Some("I") => {
                    let id = parse_u64(it.next(), lineno, "internal id")?;
                    let l = parse_u64(it.next(), lineno, "left child id")?;
                    let r = parse_u64(it.next(), lineno, "right child id")?;
                    referenced.push(l);
                    referenced.push(r);
                    raw.insert(id, Raw::Internal(l, r));
                }
                Some(tok) => {
                    return Err(Error::parse(lineno, format!("unexpected token {tok:?}")));
                }
                None => unreachable!(),
            }
        }
        let declared =
            declared.ok_or_else(|| Error::parse(0, "missing \"vtree <n>\" header"))?;
        if declared as usize != raw.len() {
            return Err(Error::parse(
                0,
                format!("header declares {declared} nodes, found {}", raw.len()),
            ));
        }
        for child in &referenced {
            if !raw.contains_key(child) {
                return Err(Error::parse(0, format!("dangling child id {child}")));
            }
        }
        let mut roots: Vec<u64> = raw
            .keys()
            .filter(|id| !referenced.contains(id))
            .copied()
            .collect();
        if roots.len() != 1 {
            return Err(Error::parse(
                0,
                format!("expected exactly one root, found {}", roots.len()),
            ));
        }
        let root = roots.pop().unwrap();

        fn to_shape(raw: &HashMap<u64, Raw>, id: u64, depth: usize) -> Result<Shape> {
            if depth > raw.len() {
                return Err(Error::parse(0, "cycle in vtree node references"));
            }
            match raw.get(&id) {
                Some(Raw::Leaf(v)) => Ok(Shape::Leaf(*v)),
                Some(Raw::Internal(l, r)) => Ok(Shape::node(
                    to_shape(raw, *l, depth + 1)?,
                    to_shape(raw, *r, depth + 1)?,
                )),
                None => Err(Error::parse(0, format!("dangling child id {id}"))),
            }
        }
        let shape = to_shape(&raw, root, 0)?;
        Vtree::from_shape(&shape)
            .map_err(|e| Error::parse(0, format!("invalid vtree: {e}")))
    }
}

fn parse_u64(tok: Option<&str>, lineno: usize, what: &str) -> Result<u64> {
    tok.and_then(|t| t.parse::<u64>().ok())
        .ok_or_else(|| Error::parse(lineno, format!("expected {what}")))
}

/// Bottom-up shape hashing: all leaves share one code, an internal node's
/// code is interned from its children's codes. The representative of a class
/// is the smallest preorder id carrying the code.
fn compute_iso_classes(nodes: &[VtreeNode], n_nodes: usize) -> Vec<NodeId> {
    let mut code = vec![0u32; n_nodes + 1];
    let mut intern: HashMap<(u32, u32), u32> = HashMap::new();
    let mut next_code = 1u32;
    // Reverse preorder visits children before parents.
    for id in (1..=n_nodes).rev() {
        code[id] = match nodes[id].kind {
            NodeKind::Leaf(_) => 0,
            NodeKind::Internal { left, right } => {
                let key = (code[left as usize], code[right as usize]);
                *intern.entry(key).or_insert_with(|| {
                    let c = next_code;
                    next_code += 1;
                    c
                })
            }
        };
    }
    let mut rep: HashMap<u32, NodeId> = HashMap::new();
    let mut iso = vec![0 as NodeId; n_nodes + 1];
    for id in 1..=n_nodes {
        let r = *rep.entry(code[id]).or_insert(id as NodeId);
        iso[id] = r;
    }
    iso
}

type LcaIndex = (Vec<NodeId>, Vec<u32>, Vec<usize>, Vec<Vec<usize>>);

fn build_lca_index(nodes: &[VtreeNode], n_nodes: usize) -> LcaIndex {
    let mut euler = Vec::with_capacity(2 * n_nodes);
    let mut depth = vec![0u32; n_nodes + 1];
    let mut first = vec![usize::MAX; n_nodes + 1];

    // Iterative Euler tour from the root.
    let mut stack: Vec<(NodeId, u32, u8)> = vec![(1, 0, 0)];
    while let Some((id, d, state)) = stack.pop() {
        depth[id as usize] = d;
        if first[id as usize] == usize::MAX {
            first[id as usize] = euler.len();
        }
        euler.push(id);
        if state == 0 {
            if let NodeKind::Internal { left, .. } = nodes[id as usize].kind {
                // Revisit the node between its two subtrees.
                stack.push((id, d, 1));
                stack.push((left, d + 1, 0));
            }
        } else if let NodeKind::Internal { right, .. } = nodes[id as usize].kind {
            stack.push((right, d + 1, 0));
        }
    }

    let n = euler.len();
    let levels = usize::ilog2(n) as usize + 1;
    let mut sparse: Vec<Vec<usize>> = Vec::with_capacity(levels);
    sparse.push((0..n).collect());
    let mut k = 1;
    while (1 << k) <= n {
        let prev = &sparse[k - 1];
        let mut row = Vec::with_capacity(n + 1 - (1 << k));
        for i in 0..=n - (1 << k) {
            let a = prev[i];
            let b = prev[i + (1 << (k - 1))];
            row.push(if depth[euler[a] as usize] <= depth[euler[b] as usize] {
                a
            } else {
                b
            });
        }
        sparse.push(row);
        k += 1;
    }
    (euler, depth, first, sparse)
}
