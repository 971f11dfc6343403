//! Baseline SDD manager: compressed and trimmed, hence canonical for a
//! fixed vtree. Used as the size comparison target and as a secondary
//! oracle for the VS-SDD manager.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::op::Op;
use crate::vtree::{NodeId, Side, Var, Vtree};

pub type SddId = u32;

pub const SDD_FALSE: SddId = 0;
pub const SDD_TRUE: SddId = 1;

/// Element of a decomposition: (prime, sub).
pub type SddElement = (SddId, SddId);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SddPayload {
    False,
    True,
    Literal(Var, bool),
    Decomposition(Box<[SddElement]>),
}

#[derive(Debug)]
struct SddNode {
    /// Respected vtree node: 0 for constants, the leaf for literals, an
    /// internal node for decompositions.
    vtree: NodeId,
    payload: SddPayload,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum UniqueKey {
    Literal(Var, bool),
    Decomposition(NodeId, Box<[SddElement]>),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SddStats {
    pub apply_calls: u64,
    pub cache_hits: u64,
}

pub struct SddManager {
    vtree: Arc<Vtree>,
    nodes: Vec<SddNode>,
    unique: HashMap<UniqueKey, SddId>,
    apply_cache: HashMap<(SddId, SddId, Op), SddId>,
    negation: Vec<Option<SddId>>,
    pub stats: SddStats,
}

impl SddManager {
    pub fn new(vtree: Arc<Vtree>) -> SddManager {
        SddManager {
            vtree,
            nodes: vec![
                SddNode {
                    vtree: 0,
                    payload: SddPayload::False,
                },
                SddNode {
                    vtree: 0,
                    payload: SddPayload::True,
                },
            ],
            unique: HashMap::new(),
            apply_cache: HashMap::new(),
            negation: vec![Some(SDD_TRUE), Some(SDD_FALSE)],
            stats: SddStats::default(),
        }
    }

    pub fn vtree(&self) -> &Arc<Vtree> {
        &self.vtree
    }

    pub fn constant(&self, value: bool) -> SddId {
        if value {
            SDD_TRUE
        } else {
            SDD_FALSE
        }
    }

    pub fn literal(&mut self, var: Var, polarity: bool) -> Result<SddId> {
        let leaf = self.vtree.leaf_of(var)?;
        Ok(self.intern(UniqueKey::Literal(var, polarity), leaf, || {
            SddPayload::Literal(var, polarity)
        }))
    }

    pub fn payload(&self, id: SddId) -> &SddPayload {
        &self.nodes[id as usize].payload
    }

    /// Vtree node the SDD node respects (0 for constants).
    pub fn respects(&self, id: SddId) -> NodeId {
        self.nodes[id as usize].vtree
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    fn intern(
        &mut self,
        key: UniqueKey,
        vtree: NodeId,
        payload: impl FnOnce() -> SddPayload,
    ) -> SddId {
        if let Some(&id) = self.unique.get(&key) {
            return id;
        }
        let id = self.nodes.len() as SddId;
        self.nodes.push(SddNode {
            vtree,
            payload: payload(),
        });
        self.unique.insert(key, id);
        self.negation.push(None);
        id
    }

    pub fn negate(&mut self, a: SddId) -> SddId {
        if let Some(n) = self.negation[a as usize] {
            return n;
        }
        let result = match self.nodes[a as usize].payload.clone() {
            SddPayload::False => SDD_TRUE,
            SddPayload::True => SDD_FALSE,
            SddPayload::Literal(v, pol) => self.literal(v, !pol).unwrap(),
            SddPayload::Decomposition(elems) => {
                let w = self.nodes[a as usize].vtree;
                let neg: Vec<SddElement> = elems
                    .iter()
                    .map(|&(p, s)| (p, self.negate(s)))
                    .collect();
                self.get_node(w, neg)
            }
        };
        self.negation[a as usize] = Some(result);
        self.negation[result as usize] = Some(a);
        result
    }

    /// Compresses, trims, and interns a decomposition at vtree node `w`.
    pub(crate) fn get_node(&mut self, w: NodeId, elements: Vec<SddElement>) -> SddId {
        // Compression: merge primes that map to the same sub.
        let mut by_sub: Vec<(SddId, SddId)> = Vec::new();
        for (p, s) in elements {
            if let Some(slot) = by_sub.iter_mut().find(|(_, s2)| *s2 == s) {
                slot.0 = self.apply(slot.0, p, Op::Or);
            } else {
                by_sub.push((p, s));
            }
        }
        let mut elems = by_sub;
        elems.sort_unstable();

        // Trimming.
        if elems.len() == 1 {
            let (p, s) = elems[0];
            debug_assert_eq!(p, SDD_TRUE, "single prime of an X-partition must be true");
            return s;
        }
        if elems.len() == 2 {
            let top = elems.iter().find(|&&(_, s)| s == SDD_TRUE);
            let bot = elems.iter().find(|&&(_, s)| s == SDD_FALSE);
            if let (Some(&(pt, _)), Some(&(pf, _))) = (top, bot) {
                if self.negate(pt) == pf {
                    return pt;
                }
            }
        }
        let elems: Box<[SddElement]> = elems.into_boxed_slice();
        self.intern(UniqueKey::Decomposition(w, elems.clone()), w, || {
            SddPayload::Decomposition(elems)
        })
    }

    pub fn apply(&mut self, a: SddId, b: SddId, op: Op) -> SddId {
        self.stats.apply_calls += 1;
        // Constant and equal-operand shortcuts.
        match (op, a, b) {
            (Op::And, SDD_FALSE, _) | (Op::And, _, SDD_FALSE) => return SDD_FALSE,
            (Op::And, SDD_TRUE, x) | (Op::And, x, SDD_TRUE) => return x,
            (Op::Or, SDD_TRUE, _) | (Op::Or, _, SDD_TRUE) => return SDD_TRUE,
            (Op::Or, SDD_FALSE, x) | (Op::Or, x, SDD_FALSE) => return x,
            (Op::Xor, SDD_FALSE, x) | (Op::Xor, x, SDD_FALSE) => return x,
            (Op::Xor, SDD_TRUE, x) | (Op::Xor, x, SDD_TRUE) => return self.negate(x),
            _ => {}
        }
        if a == b {
            return match op {
                Op::And | Op::Or => a,
                Op::Xor => SDD_FALSE,
            };
        }
        let key = (a.min(b), a.max(b), op);
        if let Some(&r) = self.apply_cache.get(&key) {
            self.stats.cache_hits += 1;
            return r;
        }

        let va = self.nodes[a as usize].vtree;
        let vb = self.nodes[b as usize].vtree;
        let result = if va == vb && self.vtree.is_leaf(va) {
            // Two literals over the same variable.
            let (pa, pb) = match (self.payload(a), self.payload(b)) {
                (SddPayload::Literal(_, pa), SddPayload::Literal(_, pb)) => (*pa, *pb),
                _ => unreachable!(),
            };
            match (op, pa == pb) {
                (_, true) => unreachable!("equal literals are identical nodes"),
                (Op::And, false) => SDD_FALSE,
                (Op::Or, false) => SDD_TRUE,
                (Op::Xor, false) => SDD_TRUE,
            }
        } else {
            let w = self.vtree.lca(va, vb).expect("valid vtree ids");
            let ea = self.expand_at(a, w);
            let eb = self.expand_at(b, w);
            let mut gamma: Vec<SddElement> = Vec::new();
            for &(p_i, s_i) in &ea {
                for &(q_j, r_j) in &eb {
                    let p = self.apply(p_i, q_j, Op::And);
                    if p != SDD_FALSE {
                        let s = self.apply(s_i, r_j, op);
                        gamma.push((p, s));
                    }
                }
            }
            self.get_node(w, gamma)
        };
        self.apply_cache.insert(key, result);
        result
    }

    /// Elements of `a` viewed at ancestor node `w`.
    fn expand_at(&mut self, a: SddId, w: NodeId) -> Vec<SddElement> {
        let va = self.nodes[a as usize].vtree;
        if va == w {
            match self.payload(a) {
                SddPayload::Decomposition(elems) => return elems.to_vec(),
                _ => unreachable!("literal at the lca is handled by the terminal case"),
            }
        }
        match self.vtree.descendant_side(w, va).expect("valid ids") {
            Side::Left => {
                let na = self.negate(a);
                vec![(a, SDD_TRUE), (na, SDD_FALSE)]
            }
            Side::Right => vec![(SDD_TRUE, a)],
            Side::Equal | Side::Unrelated => unreachable!("w is a strict ancestor"),
        }
    }

    /// Conditions `a` on a consistent term of signed literals.
    pub fn condition(&mut self, a: SddId, term: &[i64]) -> Result<SddId> {
        let assign = term_to_map(term, self.vtree.num_vars())?;
        let mut cache = HashMap::new();
        Ok(self.cond_rec(a, &assign, &mut cache))
    }

    fn cond_rec(
        &mut self,
        a: SddId,
        assign: &HashMap<Var, bool>,
        cache: &mut HashMap<SddId, SddId>,
    ) -> SddId {
        match self.nodes[a as usize].payload.clone() {
            SddPayload::False | SddPayload::True => a,
            SddPayload::Literal(v, pol) => match assign.get(&v) {
                None => a,
                Some(&val) => self.constant(val == pol),
            },
            SddPayload::Decomposition(elems) => {
                if let Some(&r) = cache.get(&a) {
                    return r;
                }
                let w = self.nodes[a as usize].vtree;
                if self.vtree.subtree_vars(w).iter().all(|v| !assign.contains_key(v)) {
                    cache.insert(a, a);
                    return a;
                }
                let mut gamma = Vec::new();
                for &(p, s) in elems.iter() {
                    let pc = self.cond_rec(p, assign, cache);
                    if pc == SDD_FALSE {
                        continue;
                    }
                    let sc = self.cond_rec(s, assign, cache);
                    gamma.push((pc, sc));
                }
                let r = self.get_node(w, gamma);
                cache.insert(a, r);
                r
            }
        }
    }

    /// Model count over all vtree variables.
    pub fn model_count(&self, a: SddId) -> BigUint {
        let m = self.vtree.num_vars();
        let mut cache = HashMap::new();
        match self.payload(a) {
            SddPayload::False => BigUint::zero(),
            SddPayload::True => pow2(m),
            SddPayload::Literal(..) => pow2(m - 1),
            SddPayload::Decomposition(_) => {
                let tag = self.respects(a);
                self.count_rec(a, &mut cache) * pow2(m - self.vtree.leaves(tag))
            }
        }
    }

    fn count_rec(&self, a: SddId, cache: &mut HashMap<SddId, BigUint>) -> BigUint {
        if let Some(c) = cache.get(&a) {
            return c.clone();
        }
        let w = self.respects(a);
        let (wl, wr) = (self.vtree.left(w), self.vtree.right(w));
        let elems = match self.payload(a) {
            SddPayload::Decomposition(e) => e.clone(),
            _ => unreachable!(),
        };
        let mut total = BigUint::zero();
        for &(p, s) in elems.iter() {
            let np = self.count_child(p, wl, cache);
            let ns = self.count_child(s, wr, cache);
            total += np * ns;
        }
        cache.insert(a, total.clone());
        total
    }

    fn count_child(&self, c: SddId, target: NodeId, cache: &mut HashMap<SddId, BigUint>) -> BigUint {
        let leaves = self.vtree.leaves(target);
        match self.payload(c) {
            SddPayload::False => BigUint::zero(),
            SddPayload::True => pow2(leaves),
            SddPayload::Literal(..) => pow2(leaves - 1),
            SddPayload::Decomposition(_) => {
                let tag = self.respects(c);
                self.count_rec(c, cache) * pow2(leaves - self.vtree.leaves(tag))
            }
        }
    }

    /// Sum of element counts over distinct reachable decompositions.
    pub fn size(&self, a: SddId) -> u64 {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![a];
        let mut size = 0u64;
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            if let SddPayload::Decomposition(elems) = self.payload(id) {
                size += elems.len() as u64;
                for &(p, s) in elems.iter() {
                    stack.push(p);
                    stack.push(s);
                }
            }
        }
        size
    }
}

/// Validates a term and turns it into an assignment map.
pub(crate) fn term_to_map(term: &[i64], num_vars: u32) -> Result<HashMap<Var, bool>> {
    let mut assign = HashMap::new();
    for &lit in term {
        if lit == 0 || lit.unsigned_abs() > num_vars as u64 {
            return Err(Error::UnknownVariable(lit.unsigned_abs() as u32));
        }
        let var = lit.unsigned_abs() as Var;
        let val = lit > 0;
        if let Some(&prev) = assign.get(&var) {
            if prev != val {
                return Err(Error::InvalidTerm(var));
            }
        }
        assign.insert(var, val);
    }
    Ok(assign)
}

pub(crate) fn pow2(exp: u32) -> BigUint {
    BigUint::one() << exp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::op::Op;

    fn mgr4() -> SddManager {
        SddManager::new(Arc::new(Vtree::build_balanced(&[1, 2, 3, 4]).unwrap()))
    }

    /// (A and B) or (B and C) or (C and D), the running example.
    fn running_example(m: &mut SddManager) -> SddId {
        let a = m.literal(1, true).unwrap();
        let b = m.literal(2, true).unwrap();
        let c = m.literal(3, true).unwrap();
        let d = m.literal(4, true).unwrap();
        let ab = m.apply(a, b, Op::And);
        let bc = m.apply(b, c, Op::And);
        let cd = m.apply(c, d, Op::And);
        let t = m.apply(ab, bc, Op::Or);
        m.apply(t, cd, Op::Or)
    }

    #[test]
    fn literal_interning() {
        let mut m = mgr4();
        let a1 = m.literal(1, true).unwrap();
        let a2 = m.literal(1, true).unwrap();
        assert_eq!(a1, a2);
        assert!(m.literal(5, true).is_err());
    }

    #[test]
    fn contradiction_is_false() {
        let mut m = mgr4();
        let a = m.literal(1, true).unwrap();
        let na = m.literal(1, false).unwrap();
        assert_eq!(m.apply(a, na, Op::And), SDD_FALSE);
        assert_eq!(m.apply(a, na, Op::Or), SDD_TRUE);
        assert_eq!(m.apply(a, a, Op::Xor), SDD_FALSE);
    }

    #[test]
    fn running_example_size_is_9() {
        let mut m = mgr4();
        let f = running_example(&mut m);
        assert_eq!(m.size(f), 9);
        assert_eq!(m.model_count(f), 8u32.into());
    }

    #[test]
    fn count_of_constants_and_literals() {
        let mut m = mgr4();
        assert_eq!(m.model_count(SDD_TRUE), 16u32.into());
        assert_eq!(m.model_count(SDD_FALSE), 0u32.into());
        let a = m.literal(1, true).unwrap();
        assert_eq!(m.model_count(a), 8u32.into());
    }

    #[test]
    fn negation_involution() {
        let mut m = mgr4();
        let f = running_example(&mut m);
        let nf = m.negate(f);
        assert_ne!(f, nf);
        assert_eq!(m.negate(nf), f);
        assert_eq!(m.model_count(nf), 8u32.into());
    }

    #[test]
    fn condition_on_term() {
        let mut m = mgr4();
        let f = running_example(&mut m);
        // f | B  ==  A or C
        let fb = m.condition(f, &[2]).unwrap();
        let a = m.literal(1, true).unwrap();
        let c = m.literal(3, true).unwrap();
        let aoc = m.apply(a, c, Op::Or);
        assert_eq!(fb, aoc);
        assert!(m.condition(f, &[2, -2]).is_err());
    }

    #[test]
    fn canonicity_under_apply_order() {
        let mut m = mgr4();
        let f1 = running_example(&mut m);
        // Same function, different clause order.
        let a = m.literal(1, true).unwrap();
        let b = m.literal(2, true).unwrap();
        let c = m.literal(3, true).unwrap();
        let d = m.literal(4, true).unwrap();
        let cd = m.apply(c, d, Op::And);
        let bc = m.apply(b, c, Op::And);
        let ab = m.apply(a, b, Op::And);
        let t = m.apply(cd, bc, Op::Or);
        let f2 = m.apply(t, ab, Op::Or);
        assert_eq!(f1, f2);
    }
}
