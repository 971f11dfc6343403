//! The VS-SDD manager.
//!
//! A Boolean function is a pair `(structure, offset)`: an interned DAG node
//! plus the preorder id of the vtree node it is instantiated at. Structures
//! store child references with id *deltas* instead of absolute vtree ids, so
//! one structure can serve every offset whose vtree node has the same shape
//! (the identical vtree rule). Constants always carry offset 0.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::op::Op;
use crate::sdd::{SddId, SddManager};
use crate::vtree::{NodeId, Var, Vtree, SENTINEL};

pub type StructId = u32;

pub const VS_FALSE: StructId = 0;
pub const VS_TRUE: StructId = 1;
/// Positive literal shape; the variable is determined by the offset.
pub const VS_POS: StructId = 2;
/// Negative literal shape.
pub const VS_NEG: StructId = 3;

const FIRST_DECOMP: StructId = 4;

/// Decomposition element. Deltas are relative to the offset of the owning
/// decomposition; constants carry delta 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element {
    pub prime: StructId,
    pub d: i32,
    pub sub: StructId,
    pub e: i32,
}

/// Semantic handle: structure reference plus offset (0 iff constant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VsSdd {
    pub structure: StructId,
    pub offset: NodeId,
}

impl VsSdd {
    pub fn is_constant(&self) -> bool {
        self.structure < VS_POS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VsPayload<'a> {
    False,
    True,
    PosLit,
    NegLit,
    Decomposition(&'a [Element]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Trimmed,
    Normalized,
}

#[derive(Debug)]
struct DecompNode {
    /// Iso-class representative the node was interned under.
    class: NodeId,
    elements: Box<[Element]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct ConvKey {
    a: StructId,
    b: StructId,
    fa: bool,
    fb: bool,
    ea: u32,
    eb: u32,
    class: NodeId,
    op: Op,
    compress: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VsStats {
    pub apply_calls: u64,
    pub cache_hits: u64,
    /// Apply executions that missed the cache and ran the element product.
    pub cache_misses: u64,
}

pub struct VsManager {
    vtree: Arc<Vtree>,
    mode: Mode,
    compress: bool,
    /// Effective compression for the current operation; sentential
    /// entailment temporarily clears it.
    compress_active: bool,
    decomps: Vec<DecompNode>,
    unique: HashMap<(NodeId, Box<[Element]>), StructId>,
    conv: HashMap<ConvKey, (StructId, i32)>,
    norm_cache: HashMap<(StructId, StructId, Op, bool), StructId>,
    consistency: HashMap<StructId, bool>,
    pub stats: VsStats,
}

impl VsManager {
    pub fn new(vtree: Arc<Vtree>, mode: Mode, compress: bool) -> VsManager {
        VsManager {
            vtree,
            mode,
            compress,
            compress_active: compress,
            decomps: Vec::new(),
            unique: HashMap::new(),
            conv: HashMap::new(),
            norm_cache: HashMap::new(),
            consistency: HashMap::new(),
            stats: VsStats::default(),
        }
    }

    pub fn vtree(&self) -> &Arc<Vtree> {
        &self.vtree
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn compression(&self) -> bool {
        self.compress
    }

    pub fn num_structures(&self) -> usize {
        self.decomps.len() + FIRST_DECOMP as usize
    }

    pub fn payload(&self, s: StructId) -> VsPayload<'_> {
        match s {
            VS_FALSE => VsPayload::False,
            VS_TRUE => VsPayload::True,
            VS_POS => VsPayload::PosLit,
            VS_NEG => VsPayload::NegLit,
            _ => VsPayload::Decomposition(&self.decomps[(s - FIRST_DECOMP) as usize].elements),
        }
    }

    pub fn elements(&self, s: StructId) -> Option<&[Element]> {
        if s >= FIRST_DECOMP {
            Some(&self.decomps[(s - FIRST_DECOMP) as usize].elements)
        } else {
            None
        }
    }

    /// Iso-class a decomposition was interned under (0 for terminals).
    pub fn class_of(&self, s: StructId) -> NodeId {
        if s >= FIRST_DECOMP {
            self.decomps[(s - FIRST_DECOMP) as usize].class
        } else {
            0
        }
    }

    pub fn constant(&self, value: bool) -> VsSdd {
        VsSdd {
            structure: if value { VS_TRUE } else { VS_FALSE },
            offset: 0,
        }
    }

    pub fn literal(&self, var: Var, polarity: bool) -> Result<VsSdd> {
        let leaf = self.vtree.leaf_of(var)?;
        Ok(VsSdd {
            structure: if polarity { VS_POS } else { VS_NEG },
            offset: leaf,
        })
    }

    fn check_handle(&self, f: VsSdd) -> Result<()> {
        if f.structure as usize >= self.num_structures() {
            return Err(Error::Contract(format!(
                "structure id {} does not belong to this manager",
                f.structure
            )));
        }
        match self.payload(f.structure) {
            VsPayload::False | VsPayload::True => {
                if f.offset != 0 {
                    return Err(Error::Contract("constants must carry offset 0".into()));
                }
            }
            VsPayload::PosLit | VsPayload::NegLit => {
                if f.offset == 0 || f.offset > self.vtree.num_nodes() || !self.vtree.is_leaf(f.offset)
                {
                    return Err(Error::Contract(format!(
                        "literal offset {} is not a leaf",
                        f.offset
                    )));
                }
            }
            VsPayload::Decomposition(_) => {
                if f.offset == 0 || f.offset > self.vtree.num_nodes() {
                    return Err(Error::InvalidId(f.offset));
                }
                if self.vtree.iso_class(f.offset)? != self.class_of(f.structure) {
                    return Err(Error::Contract(format!(
                        "offset {} violates the identical vtree rule for structure {}",
                        f.offset, f.structure
                    )));
                }
            }
        }
        Ok(())
    }

    /// Applies a binary operation, dispatching on the manager mode.
    pub fn apply(&mut self, a: VsSdd, b: VsSdd, op: Op) -> Result<VsSdd> {
        self.check_handle(a)?;
        self.check_handle(b)?;
        match self.mode {
            Mode::Trimmed => self.apply_trimmed(a.structure, b.structure, a.offset, b.offset, false, false, op),
            Mode::Normalized => self.apply_normalized_dispatch(a, b, op),
        }
    }

    pub fn negate(&mut self, f: VsSdd) -> Result<VsSdd> {
        let top = self.constant(true);
        self.apply(f, top, Op::Xor)
    }

    // ----- trimmed Apply -----

    /// Trimmed-mode Apply with deferred negation flags; five-way dispatch on
    /// the relation between the two offsets.
    pub fn apply_trimmed(
        &mut self,
        mut a: StructId,
        mut b: StructId,
        mut ka: NodeId,
        mut kb: NodeId,
        mut fa: bool,
        mut fb: bool,
        op: Op,
    ) -> Result<VsSdd> {
        if self.mode != Mode::Trimmed {
            return Err(Error::Contract("apply_trimmed requires a trimmed-mode manager".into()));
        }
        self.stats.apply_calls += 1;

        // Flagged terminals are flipped before dispatch.
        if a < FIRST_DECOMP && fa {
            a = neg_terminal(a);
            fa = false;
        }
        if b < FIRST_DECOMP && fb {
            b = neg_terminal(b);
            fb = false;
        }
        if a < VS_POS {
            ka = 0;
        }
        if b < VS_POS {
            kb = 0;
        }

        // Case (1): terminal against terminal with compatible offsets.
        if a < FIRST_DECOMP && b < FIRST_DECOMP && (ka == 0 || kb == 0 || ka == kb) {
            return Ok(terminal_combine(a, b, ka, kb, op));
        }

        let w = self.vtree.lca(ka, kb)?;
        debug_assert_ne!(w, SENTINEL);
        let class = self.vtree.iso_class(w)?;
        let ea = ka.saturating_sub(w);
        let eb = kb.saturating_sub(w);
        let key = ConvKey {
            a,
            b,
            fa,
            fb,
            ea,
            eb,
            class,
            op,
            compress: self.compress_active,
        };
        if let Some(&(s, rel)) = self.conv.get(&key) {
            self.stats.cache_hits += 1;
            return Ok(self.at(s, w, rel));
        }
        self.stats.cache_misses += 1;

        let alpha = self.expand(a, fa, ka, w);
        let beta = self.expand(b, fb, kb, w);
        let mut gamma: Vec<Element> = Vec::new();
        for pe in &alpha {
            for qe in &beta {
                let p = self.apply_trimmed(
                    pe.prime,
                    qe.prime,
                    add_delta(ka, pe.d),
                    add_delta(kb, qe.d),
                    pe.f_prime,
                    qe.f_prime,
                    Op::And,
                )?;
                if self.consistent(p.structure) {
                    let s = self.apply_trimmed(
                        pe.sub,
                        qe.sub,
                        add_delta(ka, pe.e),
                        add_delta(kb, qe.e),
                        pe.f_sub,
                        qe.f_sub,
                        op,
                    )?;
                    gamma.push(Element {
                        prime: p.structure,
                        d: rel_delta(p.offset, w),
                        sub: s.structure,
                        e: rel_delta(s.offset, w),
                    });
                }
            }
        }
        let (res, rel) = self.get_node(gamma, w)?;
        self.conv.insert(key, (res, rel));
        Ok(self.at(res, w, rel))
    }

    fn at(&self, s: StructId, w: NodeId, rel: i32) -> VsSdd {
        VsSdd {
            structure: s,
            offset: if s < VS_POS { 0 } else { w + rel as NodeId },
        }
    }

    /// Expansion of `(a, k)` at ancestor node `w` (Alg. `Expand`).
    fn expand(&self, a: StructId, f: bool, k: NodeId, w: NodeId) -> Vec<ExpElement> {
        if k == w {
            let elems = self.elements(a).expect("non-terminal at the lca");
            return elems
                .iter()
                .map(|el| ExpElement {
                    prime: el.prime,
                    d: el.d,
                    f_prime: false,
                    sub: el.sub,
                    e: el.e,
                    f_sub: f,
                })
                .collect();
        }
        let right = self.vtree.right(w);
        if k != 0 && k < right {
            // Left expansion.
            vec![
                ExpElement {
                    prime: a,
                    d: 0,
                    f_prime: f,
                    sub: VS_TRUE,
                    e: 0,
                    f_sub: false,
                },
                ExpElement {
                    prime: a,
                    d: 0,
                    f_prime: !f,
                    sub: VS_FALSE,
                    e: 0,
                    f_sub: false,
                },
            ]
        } else {
            // Right expansion (also constants, whose offset is 0).
            vec![ExpElement {
                prime: VS_TRUE,
                d: 0,
                f_prime: false,
                sub: a,
                e: 0,
                f_sub: f,
            }]
        }
    }

    // ----- normalized Apply -----

    fn apply_normalized_dispatch(&mut self, a: VsSdd, b: VsSdd, op: Op) -> Result<VsSdd> {
        // Constants never need lifting.
        if a.is_constant() || b.is_constant() {
            let (c, other) = if a.is_constant() { (a, b) } else { (b, a) };
            let cv = c.structure == VS_TRUE;
            return match (op, cv) {
                (Op::And, true) | (Op::Or, false) | (Op::Xor, false) => Ok(other),
                (Op::And, false) => Ok(self.constant(false)),
                (Op::Or, true) => Ok(self.constant(true)),
                (Op::Xor, true) => {
                    if other.is_constant() {
                        Ok(self.constant(other.structure == VS_FALSE))
                    } else {
                        self.apply_normalized(other.structure, VS_TRUE, other.offset, Op::Xor)
                    }
                }
            };
        }
        let w = self.vtree.lca(a.offset, b.offset)?;
        let a = self.lift(a, w)?;
        let b = self.lift(b, w)?;
        self.apply_normalized(a.structure, b.structure, w, op)
    }

    /// Re-expresses a normalized VS-SDD at ancestor node `target`, wrapping
    /// it in single-element or prime/negated-prime decompositions level by
    /// level.
    fn lift(&mut self, f: VsSdd, target: NodeId) -> Result<VsSdd> {
        let mut cur = f;
        while cur.offset != target {
            let u = cur.offset;
            let parent = self.vtree.parent(u);
            if parent == 0 {
                return Err(Error::Contract(format!(
                    "cannot lift offset {} to non-ancestor {target}",
                    f.offset
                )));
            }
            let d = (u - parent) as i32;
            let gamma = if self.vtree.left(parent) == u {
                let neg = self.apply_normalized(cur.structure, VS_TRUE, u, Op::Xor)?;
                vec![
                    Element {
                        prime: cur.structure,
                        d,
                        sub: VS_TRUE,
                        e: 0,
                    },
                    Element {
                        prime: neg.structure,
                        d,
                        sub: VS_FALSE,
                        e: 0,
                    },
                ]
            } else {
                vec![Element {
                    prime: VS_TRUE,
                    d: 0,
                    sub: cur.structure,
                    e: d,
                }]
            };
            let (s, rel) = self.get_node(gamma, parent)?;
            cur = self.at(s, parent, rel);
        }
        Ok(cur)
    }

    /// Normalized-mode Apply for two VS-SDDs sharing offset `k` (Alg. 1).
    /// The cache is keyed by the structures and the operator only.
    pub fn apply_normalized(
        &mut self,
        a: StructId,
        b: StructId,
        k: NodeId,
        op: Op,
    ) -> Result<VsSdd> {
        if self.mode != Mode::Normalized {
            return Err(Error::Contract(
                "apply_normalized requires a normalized-mode manager".into(),
            ));
        }
        self.stats.apply_calls += 1;

        if a < FIRST_DECOMP && b < FIRST_DECOMP {
            let (ka, kb) = (
                if a < VS_POS { 0 } else { k },
                if b < VS_POS { 0 } else { k },
            );
            return Ok(terminal_combine(a, b, ka, kb, op));
        }

        let key = (a, b, op, self.compress_active);
        if let Some(&s) = self.norm_cache.get(&key) {
            self.stats.cache_hits += 1;
            return Ok(self.at(s, k, 0));
        }
        self.stats.cache_misses += 1;

        let node = k;
        debug_assert!(!self.vtree.is_leaf(node));
        let d_left = 1i32;
        let d_right = (self.vtree.right(node) - node) as i32;

        let alpha = self.expand_normalized(a);
        let beta = self.expand_normalized(b);
        let mut gamma: Vec<Element> = Vec::new();
        for &(p_i, s_i) in &alpha {
            for &(q_j, r_j) in &beta {
                let p = if p_i < VS_POS && q_j < VS_POS {
                    terminal_combine(p_i, q_j, 0, 0, Op::And)
                } else {
                    self.apply_normalized(p_i, q_j, add_delta(k, d_left), Op::And)?
                };
                if self.consistent(p.structure) {
                    let s = if s_i < VS_POS && r_j < VS_POS {
                        terminal_combine(s_i, r_j, 0, 0, op)
                    } else {
                        self.apply_normalized(s_i, r_j, add_delta(k, d_right), op)?
                    };
                    gamma.push(Element {
                        prime: p.structure,
                        d: if p.structure < VS_POS { 0 } else { d_left },
                        sub: s.structure,
                        e: if s.structure < VS_POS { 0 } else { d_right },
                    });
                }
            }
        }
        let (res, rel) = self.get_node(gamma, node)?;
        debug_assert_eq!(rel, 0);
        self.norm_cache.insert(key, res);
        Ok(self.at(res, k, 0))
    }

    /// `Expand` of Alg. 1: constants become degenerate single-element
    /// decompositions, decompositions are returned as-is.
    fn expand_normalized(&self, a: StructId) -> Vec<(StructId, StructId)> {
        match a {
            VS_TRUE => vec![(VS_TRUE, VS_TRUE)],
            VS_FALSE => vec![(VS_TRUE, VS_FALSE)],
            _ => self
                .elements(a)
                .expect("literal cannot respect an internal node")
                .iter()
                .map(|el| (el.prime, el.sub))
                .collect(),
        }
    }

    // ----- interning -----

    /// Compresses (when enabled), trims per the manager mode, and interns a
    /// decomposition built at vtree node `w`. Returns the structure plus the
    /// delta of its offset relative to `w` (nonzero when trimming collapsed
    /// the decomposition into one of its constituents).
    pub fn get_node(&mut self, elements: Vec<Element>, w: NodeId) -> Result<(StructId, i32)> {
        let mut elems = elements;
        if self.compress_active {
            elems = self.compress_elements(elems, w)?;
        }
        elems.sort_unstable();
        elems.dedup();

        match self.mode {
            Mode::Trimmed => {
                if elems.len() == 1 && elems[0].prime == VS_TRUE {
                    return Ok((elems[0].sub, elems[0].e));
                }
                if elems.len() == 2 {
                    let top = elems.iter().find(|el| el.sub == VS_TRUE);
                    let bot = elems.iter().find(|el| el.sub == VS_FALSE);
                    if let (Some(&t), Some(&f)) = (top, bot) {
                        if t.d == f.d {
                            let neg = self.apply_trimmed(
                                t.prime,
                                VS_TRUE,
                                add_delta(w, t.d),
                                0,
                                false,
                                false,
                                Op::Xor,
                            )?;
                            if neg.structure == f.prime && neg.offset == add_delta(w, f.d) {
                                return Ok((t.prime, t.d));
                            }
                        }
                    }
                }
            }
            Mode::Normalized => {
                // Lightly trimmed only.
                if elems.len() == 1 && elems[0].prime == VS_TRUE && elems[0].sub < VS_POS {
                    return Ok((elems[0].sub, 0));
                }
            }
        }

        let class = self.vtree.iso_class(w)?;
        let key = (class, elems.into_boxed_slice());
        if let Some(&id) = self.unique.get(&key) {
            return Ok((id, 0));
        }
        let id = FIRST_DECOMP + self.decomps.len() as StructId;
        self.decomps.push(DecompNode {
            class,
            elements: key.1.clone(),
        });
        self.unique.insert(key, id);
        Ok((id, 0))
    }

    /// OR-merges primes whose sub references coincide.
    fn compress_elements(&mut self, elems: Vec<Element>, w: NodeId) -> Result<Vec<Element>> {
        let mut merged: Vec<Element> = Vec::with_capacity(elems.len());
        for el in elems {
            if let Some(hit) = merged
                .iter_mut()
                .find(|m| m.sub == el.sub && m.e == el.e)
            {
                let or = match self.mode {
                    Mode::Trimmed => self.apply_trimmed(
                        hit.prime,
                        el.prime,
                        add_delta(w, hit.d),
                        add_delta(w, el.d),
                        false,
                        false,
                        Op::Or,
                    )?,
                    Mode::Normalized => {
                        if hit.prime < VS_POS || el.prime < VS_POS {
                            let (c, od, o) = if hit.prime < VS_POS {
                                (hit.prime, el.d, el.prime)
                            } else {
                                (el.prime, hit.d, hit.prime)
                            };
                            if c == VS_TRUE {
                                VsSdd {
                                    structure: VS_TRUE,
                                    offset: 0,
                                }
                            } else {
                                self.at(o, w, od)
                            }
                        } else {
                            self.apply_normalized(hit.prime, el.prime, add_delta(w, hit.d), Op::Or)?
                        }
                    }
                };
                hit.prime = or.structure;
                hit.d = rel_delta(or.offset, w);
            } else {
                merged.push(el);
            }
        }
        Ok(merged)
    }

    // ----- consistency -----

    /// True unless the structure denotes the constant-false function
    /// (Alg. `Consistent`). Offset-independent: substitution-equivalent
    /// functions are equi-satisfiable.
    pub fn consistent(&mut self, s: StructId) -> bool {
        match s {
            VS_FALSE => false,
            VS_TRUE | VS_POS | VS_NEG => true,
            _ => {
                if let Some(&v) = self.consistency.get(&s) {
                    return v;
                }
                let elems: Vec<Element> = self.elements(s).unwrap().to_vec();
                let v = elems
                    .iter()
                    .any(|el| self.consistent(el.prime) && self.consistent(el.sub));
                self.consistency.insert(s, v);
                v
            }
        }
    }

    // ----- conditioning -----

    /// Conditions `(f)` on a consistent term of signed literals (Alg. Cond).
    pub fn condition(&mut self, f: VsSdd, term: &[i64]) -> Result<VsSdd> {
        self.check_handle(f)?;
        let assign = crate::sdd::term_to_map(term, self.vtree.num_vars())?;
        if assign.is_empty() {
            return Ok(f);
        }
        let mut cache: HashMap<(StructId, NodeId), VsSdd> = HashMap::new();
        self.cond_rec(f.structure, f.offset, &assign, &mut cache)
    }

    fn cond_rec(
        &mut self,
        s: StructId,
        k: NodeId,
        assign: &HashMap<Var, bool>,
        cache: &mut HashMap<(StructId, NodeId), VsSdd>,
    ) -> Result<VsSdd> {
        match self.payload(s) {
            VsPayload::False | VsPayload::True => Ok(VsSdd {
                structure: s,
                offset: 0,
            }),
            VsPayload::PosLit | VsPayload::NegLit => {
                let var = self.vtree.var_of(k).expect("literal offset is a leaf");
                match assign.get(&var) {
                    None => Ok(VsSdd {
                        structure: s,
                        offset: k,
                    }),
                    Some(&val) => Ok(self.constant(val == (s == VS_POS))),
                }
            }
            VsPayload::Decomposition(_) => {
                if self
                    .vtree
                    .subtree_vars(k)
                    .iter()
                    .all(|v| !assign.contains_key(v))
                {
                    return Ok(VsSdd {
                        structure: s,
                        offset: k,
                    });
                }
                if let Some(&r) = cache.get(&(s, k)) {
                    return Ok(r);
                }
                let elems: Vec<Element> = self.elements(s).unwrap().to_vec();
                let mut gamma = Vec::new();
                for el in elems {
                    let p = self.cond_rec(el.prime, add_delta(k, el.d), assign, cache)?;
                    if !self.consistent(p.structure) {
                        continue;
                    }
                    let sb = self.cond_rec(el.sub, add_delta(k, el.e), assign, cache)?;
                    gamma.push(Element {
                        prime: p.structure,
                        d: rel_delta(p.offset, k),
                        sub: sb.structure,
                        e: rel_delta(sb.offset, k),
                    });
                }
                let (res, rel) = self.get_node(gamma, k)?;
                let out = self.at(res, k, rel);
                cache.insert((s, k), out);
                Ok(out)
            }
        }
    }

    // ----- size -----

    /// Sum of element counts over distinct reachable decomposition
    /// structures; each shared structure counts once.
    pub fn size(&self, f: VsSdd) -> u64 {
        let mut seen = BTreeSet::new();
        let mut stack = vec![f.structure];
        let mut total = 0u64;
        while let Some(s) = stack.pop() {
            if !seen.insert(s) {
                continue;
            }
            if let Some(elems) = self.elements(s) {
                total += elems.len() as u64;
                for el in elems {
                    stack.push(el.prime);
                    stack.push(el.sub);
                }
            }
        }
        total
    }

    /// Number of distinct reachable structures (terminals included).
    pub fn node_count(&self, f: VsSdd) -> u64 {
        let mut seen = BTreeSet::new();
        let mut stack = vec![f.structure];
        while let Some(s) = stack.pop() {
            if !seen.insert(s) {
                continue;
            }
            if let Some(elems) = self.elements(s) {
                for el in elems {
                    stack.push(el.prime);
                    stack.push(el.sub);
                }
            }
        }
        seen.len() as u64
    }

    // ----- conversion -----

    /// Materializes the canonical SDD of the same function by walking every
    /// reachable (structure, absolute offset) pair.
    pub fn to_baseline_sdd(&self, f: VsSdd, sdd: &mut SddManager) -> Result<SddId> {
        if self.vtree.shape_of(self.vtree.root()) != sdd.vtree().shape_of(sdd.vtree().root()) {
            return Err(Error::Contract(
                "baseline manager must share the vtree".into(),
            ));
        }
        let mut memo: HashMap<(StructId, NodeId), SddId> = HashMap::new();
        self.to_sdd_rec(f.structure, f.offset, sdd, &mut memo)
    }

    fn to_sdd_rec(
        &self,
        s: StructId,
        k: NodeId,
        sdd: &mut SddManager,
        memo: &mut HashMap<(StructId, NodeId), SddId>,
    ) -> Result<SddId> {
        match self.payload(s) {
            VsPayload::False => Ok(sdd.constant(false)),
            VsPayload::True => Ok(sdd.constant(true)),
            VsPayload::PosLit | VsPayload::NegLit => {
                let var = self.vtree.var_of(k).expect("leaf offset");
                sdd.literal(var, s == VS_POS)
            }
            VsPayload::Decomposition(_) => {
                if let Some(&id) = memo.get(&(s, k)) {
                    return Ok(id);
                }
                let elems: Vec<Element> = self.elements(s).unwrap().to_vec();
                let mut out = Vec::with_capacity(elems.len());
                for el in elems {
                    let p = self.to_sdd_rec(el.prime, add_delta(k, el.d), sdd, memo)?;
                    let sb = self.to_sdd_rec(el.sub, add_delta(k, el.e), sdd, memo)?;
                    out.push((p, sb));
                }
                let id = sdd.get_node(k, out);
                memo.insert((s, k), id);
                Ok(id)
            }
        }
    }

    /// Interns a decomposition exactly as given, skipping compression and
    /// trimming. Used when loading serialized diagrams, whose structures are
    /// already in the manager's normal form.
    pub fn intern_raw(&mut self, class: NodeId, elements: Vec<Element>) -> Result<StructId> {
        if class == 0 || class > self.vtree.num_nodes() {
            return Err(Error::InvalidId(class));
        }
        if self.vtree.iso_class(class)? != class {
            return Err(Error::InvalidInput(format!(
                "node {class} is not an iso-class representative"
            )));
        }
        if elements.is_empty() {
            return Err(Error::InvalidInput("empty decomposition".into()));
        }
        let key = (class, elements.into_boxed_slice());
        if let Some(&id) = self.unique.get(&key) {
            return Ok(id);
        }
        let id = FIRST_DECOMP + self.decomps.len() as StructId;
        self.decomps.push(DecompNode {
            class,
            elements: key.1.clone(),
        });
        self.unique.insert(key, id);
        Ok(id)
    }

    /// Runs `body` with compression disabled, as sentential entailment's
    /// internal conjunction requires.
    pub(crate) fn uncompressed<R>(&mut self, body: impl FnOnce(&mut Self) -> R) -> R {
        let saved = self.compress_active;
        self.compress_active = false;
        let r = body(self);
        self.compress_active = saved;
        r
    }
}

#[derive(Debug, Clone, Copy)]
struct ExpElement {
    prime: StructId,
    d: i32,
    f_prime: bool,
    sub: StructId,
    e: i32,
    f_sub: bool,
}

fn neg_terminal(s: StructId) -> StructId {
    match s {
        VS_FALSE => VS_TRUE,
        VS_TRUE => VS_FALSE,
        VS_POS => VS_NEG,
        VS_NEG => VS_POS,
        _ => unreachable!(),
    }
}

fn add_delta(k: NodeId, d: i32) -> NodeId {
    (k as i64 + d as i64) as NodeId
}

fn rel_delta(offset: NodeId, w: NodeId) -> i32 {
    if offset == 0 {
        0
    } else {
        (offset - w) as i32
    }
}

/// Truth table of a terminal over its (at most one) variable: (value at
/// false, value at true).
fn terminal_semantics(s: StructId) -> (bool, bool) {
    match s {
        VS_FALSE => (false, false),
        VS_TRUE => (true, true),
        VS_POS => (false, true),
        VS_NEG => (true, false),
        _ => unreachable!(),
    }
}

/// Case (1) of trimmed Apply: both operands are terminals over a shared
/// variable (or constants).
fn terminal_combine(a: StructId, b: StructId, ka: NodeId, kb: NodeId, op: Op) -> VsSdd {
    let (a0, a1) = terminal_semantics(a);
    let (b0, b1) = terminal_semantics(b);
    let r = (op.eval(a0, b0), op.eval(a1, b1));
    let structure = match r {
        (false, false) => VS_FALSE,
        (true, true) => VS_TRUE,
        (false, true) => VS_POS,
        (true, false) => VS_NEG,
    };
    VsSdd {
        structure,
        offset: if structure < VS_POS { 0 } else { ka.max(kb) },
    }
}

/// Walks every reachable (structure, absolute offset) pair from the given
/// roots.
pub fn reachable_offsets(mgr: &VsManager, roots: &[VsSdd]) -> BTreeMap<StructId, BTreeSet<NodeId>> {
    let mut map: BTreeMap<StructId, BTreeSet<NodeId>> = BTreeMap::new();
    let mut stack: Vec<VsSdd> = roots.to_vec();
    while let Some(f) = stack.pop() {
        if !map.entry(f.structure).or_default().insert(f.offset) {
            continue;
        }
        if let Some(elems) = mgr.elements(f.structure) {
            for el in elems {
                stack.push(VsSdd {
                    structure: el.prime,
                    offset: if el.prime < VS_POS { 0 } else { add_delta(f.offset, el.d) },
                });
                stack.push(VsSdd {
                    structure: el.sub,
                    offset: if el.sub < VS_POS { 0 } else { add_delta(f.offset, el.e) },
                });
            }
        }
    }
    map
}

/// Identical-vtree-rule audit: every non-constant structure must only be
/// reachable at offsets whose vtree nodes share one iso class. Returns the
/// violating (structure, offset, offset) triples.
pub fn audit_identical_vtree_rule(
    mgr: &VsManager,
    roots: &[VsSdd],
) -> Vec<(StructId, NodeId, NodeId)> {
    let mut violations = Vec::new();
    for (s, offsets) in reachable_offsets(mgr, roots) {
        if s < VS_POS {
            continue;
        }
        let mut it = offsets.iter();
        let first = *it.next().unwrap();
        for &k in it {
            if mgr.vtree().iso_class(first).unwrap() != mgr.vtree().iso_class(k).unwrap() {
                violations.push((s, first, k));
            }
        }
    }
    violations
}

/// Number of SDD nodes the diagrams would occupy without structure sharing:
/// each decomposition counts once per distinct absolute offset reaching it.
pub fn would_be_sdd_node_count(mgr: &VsManager, roots: &[VsSdd]) -> u64 {
    reachable_offsets(mgr, roots)
        .iter()
        .filter(|(s, _)| mgr.elements(**s).is_some())
        .map(|(_, offs)| offs.len() as u64)
        .sum()
}
