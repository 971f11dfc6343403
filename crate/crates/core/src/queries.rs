//! Polytime queries and transformations on VS-SDDs: model counting, model
//! enumeration, sentential entailment, equivalence, consistency, validity,
//! clausal entailment, implicant checking, and singleton forgetting.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::op::Op;
use crate::sdd::pow2;
use crate::vssdd::{Mode, StructId, VsManager, VsPayload, VsSdd, VS_NEG, VS_POS};
use crate::vtree::{NodeId, Var};

/// Model-count cache, keyed by structure id alone: substitution-equivalent
/// functions have the same count, so every offset of a structure shares one
/// entry.
#[derive(Debug, Default)]
pub struct CountContext {
    cache: HashMap<StructId, BigUint>,
}

impl CountContext {
    pub fn new() -> CountContext {
        CountContext::default()
    }

    /// Model count over a universe of `universe` free variables. The
    /// universe must contain every variable the function depends on; a
    /// universe too small to carry the function's models is rejected.
    pub fn count(&mut self, mgr: &VsManager, f: VsSdd, universe: u32) -> Result<BigUint> {
        match mgr.payload(f.structure) {
            VsPayload::False => return Ok(BigUint::zero()),
            VsPayload::True => return Ok(pow2(universe)),
            _ => {}
        }
        let span = mgr.vtree().leaves(f.offset);
        let c = self.count_at(mgr, f.structure, f.offset);
        if universe >= span {
            Ok(c << (universe - span))
        } else {
            let divisor = pow2(span - universe);
            if (&c % &divisor) != BigUint::zero() {
                return Err(Error::InvalidUniverse);
            }
            Ok(c / divisor)
        }
    }

    /// Count over all vtree variables.
    pub fn count_all(&mut self, mgr: &VsManager, f: VsSdd) -> Result<BigUint> {
        self.count(mgr, f, mgr.vtree().num_vars())
    }

    /// Count over the variables of the subtree at the function's offset.
    fn count_at(&mut self, mgr: &VsManager, s: StructId, k: NodeId) -> BigUint {
        debug_assert!(s >= VS_POS);
        if s == VS_POS || s == VS_NEG {
            return pow2(mgr.vtree().leaves(k) - 1);
        }
        if let Some(c) = self.cache.get(&s) {
            return c.clone();
        }
        let vt = mgr.vtree().clone();
        let (left, right) = (vt.left(k), vt.right(k));
        let (l_span, r_span) = (vt.leaves(left), vt.leaves(right));
        let elems = mgr.elements(s).unwrap().to_vec();
        let mut total = BigUint::zero();
        for el in elems {
            let n_p = self.child_count(mgr, el.prime, add(k, el.d), l_span);
            if n_p.is_zero() {
                continue;
            }
            let n_s = self.child_count(mgr, el.sub, add(k, el.e), r_span);
            total += n_p * n_s;
        }
        self.cache.insert(s, total.clone());
        total
    }

    /// Models a child contributes over its `span`-variable half; variables
    /// between the child's subtree and the half are free.
    fn child_count(&mut self, mgr: &VsManager, s: StructId, k: NodeId, span: u32) -> BigUint {
        match mgr.payload(s) {
            VsPayload::False => BigUint::zero(),
            VsPayload::True => pow2(span),
            _ => self.count_at(mgr, s, k) << (span - mgr.vtree().leaves(k)),
        }
    }
}

fn add(k: NodeId, d: i32) -> NodeId {
    (k as i64 + d as i64) as NodeId
}

/// Deterministic model enumeration over all vtree variables. Models follow
/// element order depth-first; don't-care variables are expanded
/// false-before-true in leaf preorder. `limit` 0 means unlimited.
pub fn enumerate_models(mgr: &VsManager, f: VsSdd, limit: usize) -> Result<Vec<Vec<bool>>> {
    let max = if limit == 0 { usize::MAX } else { limit };
    let vt = mgr.vtree();
    let m = vt.num_vars() as usize;
    match mgr.payload(f.structure) {
        VsPayload::False => return Ok(Vec::new()),
        VsPayload::True => {
            return Ok(free_assignments(&(1..=m as Var).collect::<Vec<_>>(), max)
                .into_iter()
                .map(|fa| {
                    let mut full = vec![false; m];
                    for (v, val) in fa {
                        full[(v - 1) as usize] = val;
                    }
                    full
                }
                )
                .collect());
        }
        _ => {}
    }
    let span_vars = vt.subtree_vars(f.offset);
    let inner = node_models(mgr, f.structure, f.offset, max);
    let outer: Vec<Var> = (1..=m as Var).filter(|v| !span_vars.contains(v)).collect();
    let mut out = Vec::new();
    'outer: for model in inner {
        for fa in free_assignments(&outer, max) {
            let mut full = vec![false; m];
            for (i, &v) in span_vars.iter().enumerate() {
                full[(v - 1) as usize] = model[i];
            }
            for (v, val) in fa {
                full[(v - 1) as usize] = val;
            }
            out.push(full);
            if out.len() >= max {
                break 'outer;
            }
        }
    }
    Ok(out)
}

/// All assignments of `vars` in counting order, first variable slowest,
/// false before true.
fn free_assignments(vars: &[Var], max: usize) -> Vec<Vec<(Var, bool)>> {
    let n = vars.len();
    let rows = if n >= usize::BITS as usize - 1 {
        usize::MAX
    } else {
        1usize << n
    };
    (0..rows)
        .take(max)
        .map(|row| {
            vars.iter()
                .enumerate()
                .map(|(i, &v)| (v, row >> (n - 1 - i) & 1 == 1))
                .collect()
        })
        .collect()
}

/// Models of `(s, k)` as assignments positionally aligned with the leaf
/// preorder of `k`'s subtree.
fn node_models(mgr: &VsManager, s: StructId, k: NodeId, max: usize) -> Vec<Vec<bool>> {
    let vt = mgr.vtree();
    match mgr.payload(s) {
        VsPayload::False | VsPayload::True => unreachable!("handled by span_models"),
        VsPayload::PosLit => vec![vec![true]],
        VsPayload::NegLit => vec![vec![false]],
        VsPayload::Decomposition(elements) => {
            let (left, right) = (vt.left(k), vt.right(k));
            let mut out = Vec::new();
            'elements: for el in elements {
                let pm = span_models(mgr, el.prime, add(k, el.d), left, max);
                if pm.is_empty() {
                    continue;
                }
                let sm = span_models(mgr, el.sub, add(k, el.e), right, max);
                for p in &pm {
                    for q in &sm {
                        let mut row = p.clone();
                        row.extend_from_slice(q);
                        out.push(row);
                        if out.len() >= max {
                            break 'elements;
                        }
                    }
                }
            }
            out
        }
    }
}

/// Models a child diagram admits over the whole half rooted at `span_node`;
/// half variables outside the child's subtree are free.
fn span_models(
    mgr: &VsManager,
    s: StructId,
    k: NodeId,
    span_node: NodeId,
    max: usize,
) -> Vec<Vec<bool>> {
    let vt = mgr.vtree();
    let span_vars = vt.subtree_vars(span_node);
    match mgr.payload(s) {
        VsPayload::False => Vec::new(),
        VsPayload::True => free_assignments(&span_vars, max)
            .into_iter()
            .map(|fa| fa.into_iter().map(|(_, v)| v).collect())
            .collect(),
        _ => {
            let child_vars = vt.subtree_vars(k);
            let base = node_models(mgr, s, k, max);
            if child_vars.len() == span_vars.len() {
                return base;
            }
            let free: Vec<Var> = span_vars
                .iter()
                .copied()
                .filter(|v| !child_vars.contains(v))
                .collect();
            let mut out = Vec::new();
            'base: for b in base {
                for fa in free_assignments(&free, max) {
                    let mut by_var: HashMap<Var, bool> = fa.into_iter().collect();
                    for (i, &v) in child_vars.iter().enumerate() {
                        by_var.insert(v, b[i]);
                    }
                    out.push(span_vars.iter().map(|v| by_var[v]).collect());
                    if out.len() >= max {
                        break 'base;
                    }
                }
            }
            out
        }
    }
}

/// Sentential entailment: f entails g iff the (uncompressed) conjunction has
/// the same model count as f.
pub fn entails(mgr: &mut VsManager, f: VsSdd, g: VsSdd) -> Result<bool> {
    let conj = mgr.uncompressed(|m| m.apply(f, g, Op::And))?;
    let mut ctx = CountContext::new();
    Ok(ctx.count_all(mgr, conj)? == ctx.count_all(mgr, f)?)
}

/// Equivalence: identity comparison in canonical (trimmed + compressed)
/// mode, two-way entailment otherwise.
pub fn equivalent(mgr: &mut VsManager, f: VsSdd, g: VsSdd) -> Result<bool> {
    if mgr.mode() == Mode::Trimmed && mgr.compression() {
        Ok(f == g)
    } else {
        Ok(entails(mgr, f, g)? && entails(mgr, g, f)?)
    }
}

pub fn satisfiable(mgr: &mut VsManager, f: VsSdd) -> bool {
    mgr.consistent(f.structure)
}

pub fn valid(mgr: &mut VsManager, f: VsSdd) -> Result<bool> {
    let n = mgr.negate(f)?;
    Ok(!satisfiable(mgr, n))
}

/// Clausal entailment: f entails the clause c iff conditioning f on the
/// negated clause is unsatisfiable.
pub fn clausal_entails(mgr: &mut VsManager, f: VsSdd, clause: &[i64]) -> Result<bool> {
    let term: Vec<i64> = clause.iter().map(|&l| -l).collect();
    let g = mgr.condition(f, &term)?;
    Ok(!satisfiable(mgr, g))
}

/// Implicant check: the term entails f iff conditioning f on the term is
/// valid.
pub fn is_implicant(mgr: &mut VsManager, f: VsSdd, term: &[i64]) -> Result<bool> {
    let g = mgr.condition(f, term)?;
    valid(mgr, g)
}

/// Singleton forgetting: f|X or f|not-X.
pub fn forget_singleton(mgr: &mut VsManager, f: VsSdd, x: Var) -> Result<VsSdd> {
    if x == 0 || x > mgr.vtree().num_vars() {
        return Err(Error::UnknownVariable(x));
    }
    let pos = mgr.condition(f, &[x as i64])?;
    let neg = mgr.condition(f, &[-(x as i64)])?;
    mgr.apply(pos, neg, Op::Or)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vtree::Vtree;
    use std::sync::Arc;

    fn mgr4() -> VsManager {
        VsManager::new(
            Arc::new(Vtree::build_balanced(&[1, 2, 3, 4]).unwrap()),
            Mode::Trimmed,
            true,
        )
    }

    fn running_example(m: &mut VsManager) -> VsSdd {
        let a = m.literal(1, true).unwrap();
        let b = m.literal(2, true).unwrap();
        let c = m.literal(3, true).unwrap();
        let d = m.literal(4, true).unwrap();
        let ab = m.apply(a, b, Op::And).unwrap();
        let bc = m.apply(b, c, Op::And).unwrap();
        let cd = m.apply(c, d, Op::And).unwrap();
        let t = m.apply(ab, bc, Op::Or).unwrap();
        m.apply(t, cd, Op::Or).unwrap()
    }

    #[test]
    fn count_running_example_is_8() {
        let mut m = mgr4();
        let f = running_example(&mut m);
        let mut ctx = CountContext::new();
        assert_eq!(ctx.count_all(&m, f).unwrap(), 8u32.into());
        assert_eq!(ctx.count_all(&m, m.constant(true)).unwrap(), 16u32.into());
        assert_eq!(ctx.count_all(&m, m.constant(false)).unwrap(), 0u32.into());
        let a = m.literal(1, true).unwrap();
        assert_eq!(ctx.count_all(&m, a).unwrap(), 8u32.into());
    }

    #[test]
    fn count_respects_universe() {
        let mut m = mgr4();
        let f = running_example(&mut m);
        let fb = super::forget_singleton(&mut m, f, 2).unwrap();
        let mut ctx = CountContext::new();
        // forget(f, B) == A or C; over {A, C, D} that is 6 models.
        assert_eq!(ctx.count(&m, fb, 3).unwrap(), 6u32.into());
        assert_eq!(ctx.count(&m, fb, 5).unwrap(), 24u32.into());
        let a = m.literal(1, true).unwrap();
        assert!(ctx.count(&m, a, 0).is_err());
    }

    #[test]
    fn enumerate_matches_count() {
        let mut m = mgr4();
        let f = running_example(&mut m);
        let models = enumerate_models(&m, f, 0).unwrap();
        assert_eq!(models.len(), 8);
        let unique: std::collections::HashSet<_> = models.iter().cloned().collect();
        assert_eq!(unique.len(), 8);
        for model in &models {
            assert!(crate::oracle::eval_vs(&m, f, model));
        }
        assert_eq!(enumerate_models(&m, f, 3).unwrap().len(), 3);
        assert!(enumerate_models(&m, m.constant(false), 0).unwrap().is_empty());
    }

    #[test]
    fn enumerate_expands_dont_cares() {
        let vt = Arc::new(Vtree::build_balanced(&[1, 2]).unwrap());
        let m = VsManager::new(vt, Mode::Trimmed, true);
        let a = m.literal(1, true).unwrap();
        let models = enumerate_models(&m, a, 0).unwrap();
        assert_eq!(models, vec![vec![true, false], vec![true, true]]);
    }

    #[test]
    fn entailment_suite() {
        let mut m = mgr4();
        let f = running_example(&mut m);
        let a = m.literal(1, true).unwrap();
        let b = m.literal(2, true).unwrap();
        let ab = m.apply(a, b, Op::And).unwrap();
        assert!(entails(&mut m, f, f).unwrap());
        assert!(entails(&mut m, ab, a).unwrap());
        assert!(!entails(&mut m, f, ab).unwrap());
        assert!(equivalent(&mut m, f, f).unwrap());
        assert!(!equivalent(&mut m, f, ab).unwrap());
    }

    #[test]
    fn co_va_ce_im() {
        let mut m = mgr4();
        let f = running_example(&mut m);
        assert!(satisfiable(&mut m, f));
        let bot = m.constant(false);
        assert!(!satisfiable(&mut m, bot));
        let a = m.literal(1, true).unwrap();
        let na = m.literal(1, false).unwrap();
        let taut = m.apply(a, na, Op::Or).unwrap();
        assert!(valid(&mut m, taut).unwrap());
        assert!(!valid(&mut m, f).unwrap());
        assert!(clausal_entails(&mut m, f, &[1, 3]).unwrap());
        assert!(!clausal_entails(&mut m, f, &[1]).unwrap());
        assert!(is_implicant(&mut m, f, &[2, 3]).unwrap());
        assert!(!is_implicant(&mut m, f, &[2]).unwrap());
    }

    #[test]
    fn forget_is_idempotent() {
        let mut m = mgr4();
        let f = running_example(&mut m);
        let g1 = forget_singleton(&mut m, f, 2).unwrap();
        let g2 = forget_singleton(&mut m, g1, 2).unwrap();
        assert_eq!(g1, g2);
        let a = m.literal(1, true).unwrap();
        let b = m.literal(2, true).unwrap();
        let ab = m.apply(a, b, Op::And).unwrap();
        assert_eq!(forget_singleton(&mut m, ab, 1).unwrap(), b);
        assert!(forget_singleton(&mut m, f, 9).is_err());
    }
}
