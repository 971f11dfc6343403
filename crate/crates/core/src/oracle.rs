//! Brute-force ground truth for differential testing: truth tables,
//! combinatorial counters, and essential-dependence computation. Evaluation
//! of compiled diagrams is a plain recursive descent, independent of the
//! Apply and Count code paths.

use crate::error::{Error, Result};
use crate::frontend::Cnf;
use crate::op::Op;
use crate::sdd::{SddId, SddManager, SddPayload};
use crate::vssdd::{VsManager, VsPayload, VsSdd};
use crate::vtree::{NodeId, Var, Vtree};

pub const ORACLE_VAR_LIMIT: u32 = 24;

/// Exhaustive truth table; row index bit `i` holds the value of variable
/// `i+1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    pub num_vars: u32,
    pub bits: Vec<bool>,
}

impl TruthTable {
    pub fn build(num_vars: u32, mut f: impl FnMut(&[bool]) -> bool) -> Result<TruthTable> {
        if num_vars > ORACLE_VAR_LIMIT {
            return Err(Error::ResourceLimit(format!(
                "oracle limited to {ORACLE_VAR_LIMIT} variables, got {num_vars}"
            )));
        }
        let rows = 1usize << num_vars;
        let mut bits = Vec::with_capacity(rows);
        let mut assign = vec![false; num_vars as usize];
        for row in 0..rows {
            for (i, slot) in assign.iter_mut().enumerate() {
                *slot = row >> i & 1 == 1;
            }
            bits.push(f(&assign));
        }
        Ok(TruthTable { num_vars, bits })
    }

    pub fn count(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    pub fn is_constant(&self) -> Option<bool> {
        if self.bits.iter().all(|&b| b) {
            Some(true)
        } else if self.bits.iter().all(|&b| !b) {
            Some(false)
        } else {
            None
        }
    }

    pub fn value(&self, assign: &[bool]) -> bool {
        let mut row = 0usize;
        for (i, &v) in assign.iter().enumerate() {
            row |= (v as usize) << i;
        }
        self.bits[row]
    }

    pub fn combine(&self, other: &TruthTable, op: Op) -> Result<TruthTable> {
        if self.num_vars != other.num_vars {
            return Err(Error::InvalidInput("truth table arity mismatch".into()));
        }
        Ok(TruthTable {
            num_vars: self.num_vars,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| op.eval(a, b))
                .collect(),
        })
    }

    pub fn negate(&self) -> TruthTable {
        TruthTable {
            num_vars: self.num_vars,
            bits: self.bits.iter().map(|&b| !b).collect(),
        }
    }

    /// Conditions on `var = val`; arity is unchanged, the variable becomes
    /// irrelevant.
    pub fn restrict(&self, var: Var, val: bool) -> TruthTable {
        let bit = 1usize << (var - 1);
        TruthTable {
            num_vars: self.num_vars,
            bits: (0..self.bits.len())
                .map(|row| self.bits[if val { row | bit } else { row & !bit }])
                .collect(),
        }
    }

    pub fn restrict_term(&self, term: &[i64]) -> TruthTable {
        let mut t = self.clone();
        for &lit in term {
            t = t.restrict(lit.unsigned_abs() as Var, lit > 0);
        }
        t
    }

    pub fn forget(&self, var: Var) -> TruthTable {
        self.restrict(var, true)
            .combine(&self.restrict(var, false), Op::Or)
            .expect("same arity")
    }

    /// Satisfying rows as full assignments.
    pub fn models(&self) -> Vec<Vec<bool>> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(row, _)| {
                (0..self.num_vars as usize)
                    .map(|i| row >> i & 1 == 1)
                    .collect()
            })
            .collect()
    }

    /// Variables the function essentially depends on.
    pub fn essential_vars(&self) -> Vec<Var> {
        (1..=self.num_vars)
            .filter(|&v| self.restrict(v, true) != self.restrict(v, false))
            .collect()
    }
}

pub fn eval_cnf(cnf: &Cnf, assign: &[bool]) -> bool {
    cnf.clauses.iter().all(|clause| {
        clause
            .iter()
            .any(|&lit| assign[(lit.unsigned_abs() - 1) as usize] == (lit > 0))
    })
}

pub fn table_of_cnf(cnf: &Cnf) -> Result<TruthTable> {
    TruthTable::build(cnf.num_vars, |a| eval_cnf(cnf, a))
}

pub fn eval_sdd(mgr: &SddManager, id: SddId, assign: &[bool]) -> bool {
    match mgr.payload(id) {
        SddPayload::False => false,
        SddPayload::True => true,
        SddPayload::Literal(var, pol) => assign[(*var - 1) as usize] == *pol,
        SddPayload::Decomposition(elements) => elements
            .iter()
            .any(|&(p, s)| eval_sdd(mgr, p, assign) && eval_sdd(mgr, s, assign)),
    }
}

pub fn table_of_sdd(mgr: &SddManager, id: SddId) -> Result<TruthTable> {
    TruthTable::build(mgr.vtree().num_vars(), |a| eval_sdd(mgr, id, a))
}

/// Evaluates a VS-SDD by descending structures while tracking absolute
/// offsets.
pub fn eval_vs(mgr: &VsManager, f: VsSdd, assign: &[bool]) -> bool {
    match mgr.payload(f.structure) {
        VsPayload::False => false,
        VsPayload::True => true,
        VsPayload::PosLit | VsPayload::NegLit => {
            let var = mgr.vtree().var_of(f.offset).expect("literal offset is a leaf");
            assign[(var - 1) as usize] == (f.structure == crate::vssdd::VS_POS)
        }
        VsPayload::Decomposition(elements) => elements.iter().any(|el| {
            let p = VsSdd {
                structure: el.prime,
                offset: child_offset(el.prime, f.offset, el.d),
            };
            let s = VsSdd {
                structure: el.sub,
                offset: child_offset(el.sub, f.offset, el.e),
            };
            eval_vs(mgr, p, assign) && eval_vs(mgr, s, assign)
        }),
    }
}

fn child_offset(s: crate::vssdd::StructId, k: NodeId, d: i32) -> NodeId {
    if s < crate::vssdd::VS_POS {
        0
    } else {
        (k as i64 + d as i64) as NodeId
    }
}

pub fn table_of_vs(mgr: &VsManager, f: VsSdd) -> Result<TruthTable> {
    TruthTable::build(mgr.vtree().num_vars(), |a| eval_vs(mgr, f, a))
}

/// The deepest vtree node whose subtree covers every essential variable
/// (none for constant functions).
pub fn essential_vtree_node(table: &TruthTable, vtree: &Vtree) -> Option<NodeId> {
    let ess = table.essential_vars();
    if ess.is_empty() {
        return None;
    }
    let covers = |node: NodeId| {
        let vars = vtree.subtree_vars(node);
        ess.iter().all(|v| vars.contains(v))
    };
    let mut node = vtree.root();
    loop {
        if vtree.is_leaf(node) {
            return Some(node);
        }
        let (l, r) = (vtree.left(node), vtree.right(node));
        if covers(l) {
            node = l;
        } else if covers(r) {
            node = r;
        } else {
            return Some(node);
        }
    }
}

/// N-queens solution count by row-wise backtracking.
pub fn brute_queens(n: u32) -> u64 {
    fn rec(n: u32, row: u32, cols: u64, diag: u64, anti: u64) -> u64 {
        if row == n {
            return 1;
        }
        let mut total = 0;
        for c in 0..n {
            let (cb, db, ab) = (1u64 << c, 1u64 << (row + c), 1u64 << (n + row - c));
            if cols & cb == 0 && diag & db == 0 && anti & ab == 0 {
                total += rec(n, row + 1, cols | cb, diag | db, anti | ab);
            }
        }
        total
    }
    rec(n, 0, 0, 0, 0)
}

/// Edge list of the p x q grid graph, same ordering as the generator.
pub fn grid_edges(p: u32, q: u32) -> Vec<(u32, u32)> {
    let vertex = |r: u32, c: u32| r * q + c;
    let mut edges = Vec::new();
    for r in 0..p {
        for c in 0..q.saturating_sub(1) {
            edges.push((vertex(r, c), vertex(r, c + 1)));
        }
    }
    for r in 0..p.saturating_sub(1) {
        for c in 0..q {
            edges.push((vertex(r, c), vertex(r + 1, c)));
        }
    }
    edges
}

/// Edge list of the depth-`j` complete binary tree, edge `i` joining heap
/// nodes `(i+1)/2` and `i+1`, matching the generator's numbering.
pub fn tree_edges(j: u32) -> Vec<(u32, u32)> {
    (1..=(1u32 << (j + 1)) - 2)
        .map(|i| ((i + 1) / 2, i + 1))
        .collect()
}

/// Matching count of a graph by subset scan over its edges.
pub fn brute_matchings(edges: &[(u32, u32)]) -> Result<u64> {
    if edges.len() > 24 {
        return Err(Error::ResourceLimit(format!(
            "matching oracle limited to 24 edges, got {}",
            edges.len()
        )));
    }
    let mut total = 0;
    'subsets: for mask in 0u32..1 << edges.len() {
        let mut used = std::collections::HashSet::new();
        for (i, &(a, b)) in edges.iter().enumerate() {
            if mask >> i & 1 == 1 && (!used.insert(a) || !used.insert(b)) {
                continue 'subsets;
            }
        }
        total += 1;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{gen_grid_matching, gen_matching_tree, gen_nqueens, parse_dimacs};
    use crate::sdd::SddManager;
    use crate::vssdd::{Mode, VsManager};
    use std::sync::Arc;

    #[test]
    fn eval_and_count_small_cnf() {
        let cnf = parse_dimacs("p cnf 3 2\n1 -2 0\n2 3 0\n").unwrap();
        assert!(!eval_cnf(&cnf, &[false, false, false]));
        assert!(eval_cnf(&cnf, &[true, false, true]));
        assert_eq!(table_of_cnf(&cnf).unwrap().count(), 4);
    }

    #[test]
    fn var_limit_enforced() {
        assert!(TruthTable::build(25, |_| true).is_err());
    }

    #[test]
    fn combinatorial_counts() {
        assert_eq!(brute_queens(1), 1);
        assert_eq!(brute_queens(4), 2);
        assert_eq!(brute_queens(5), 10);
        assert_eq!(brute_queens(6), 4);
        assert_eq!(brute_matchings(&grid_edges(2, 2)).unwrap(), 7);
        assert_eq!(brute_matchings(&tree_edges(2)).unwrap(), 15);
        assert_eq!(brute_matchings(&tree_edges(1)).unwrap(), 3);
    }

    #[test]
    fn generator_cnfs_agree_with_combinatorics() {
        let q = gen_nqueens(4).unwrap();
        assert_eq!(table_of_cnf(&q.cnf).unwrap().count(), 2);
        let g = gen_grid_matching(2, 2).unwrap();
        assert_eq!(table_of_cnf(&g.cnf).unwrap().count(), 7);
        let f2 = gen_matching_tree(2).unwrap();
        assert_eq!(table_of_cnf(&f2.cnf).unwrap().count(), 15);
    }

    #[test]
    fn essential_node_examples() {
        let vt = Vtree::build_balanced(&[1, 2, 3, 4]).unwrap();
        let ab = TruthTable::build(4, |a| a[0] && a[1]).unwrap();
        assert_eq!(essential_vtree_node(&ab, &vt), Some(2));
        let just_a = TruthTable::build(4, |a| a[0]).unwrap();
        assert_eq!(essential_vtree_node(&just_a, &vt), Some(3));
        let ad = TruthTable::build(4, |a| a[0] && a[3]).unwrap();
        assert_eq!(essential_vtree_node(&ad, &vt), Some(1));
        let top = TruthTable::build(4, |_| true).unwrap();
        assert_eq!(essential_vtree_node(&top, &vt), None);
    }

    #[test]
    fn diagram_tables_match_cnf_table() {
        let cnf = parse_dimacs("p cnf 4 3\n1 2 0\n-2 3 0\n-1 -4 0\n").unwrap();
        let expect = table_of_cnf(&cnf).unwrap();
        let vt = Arc::new(Vtree::build_balanced(&[1, 2, 3, 4]).unwrap());
        let mut sm = SddManager::new(vt.clone());
        let (s, _) = crate::frontend::compile_cnf_sdd(&cnf, &mut sm).unwrap();
        assert_eq!(table_of_sdd(&sm, s).unwrap(), expect);
        let mut vm = VsManager::new(vt, Mode::Trimmed, true);
        let (v, _) = crate::frontend::compile_cnf_vs(&cnf, &mut vm).unwrap();
        assert_eq!(table_of_vs(&vm, v).unwrap(), expect);
    }

    #[test]
    fn restrict_and_forget() {
        let t = TruthTable::build(3, |a| (a[0] && a[1]) || a[2]).unwrap();
        assert_eq!(t.restrict(3, false).count(), 2);
        let forgotten = t.forget(1);
        assert_eq!(forgotten.essential_vars(), vec![2, 3]);
    }
}
