//! CNF ingestion and benchmark generators.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::op::Op;
use crate::sdd::{SddId, SddManager};
use crate::vssdd::{VsManager, VsSdd};
use crate::vtree::{Var, Vtree};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: u32,
    pub clauses: Vec<Vec<i64>>,
}

impl Cnf {
    pub fn new(num_vars: u32, clauses: Vec<Vec<i64>>) -> Cnf {
        Cnf { num_vars, clauses }
    }

    /// DIMACS text with a leading comment naming the instance.
    pub fn serialize(&self, comment: &str) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        if !comment.is_empty() {
            let _ = writeln!(out, "c {comment}");
        }
        let _ = writeln!(out, "p cnf {} {}", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            for lit in clause {
                let _ = write!(out, "{lit} ");
            }
            let _ = writeln!(out, "0");
        }
        out
    }
}

/// Parses DIMACS CNF. Comment lines, stray whitespace, and SATLIB's `%`
/// terminator are tolerated; a clause-count mismatch is not fatal.
pub fn parse_dimacs(text: &str) -> Result<Cnf> {
    let mut num_vars: Option<u32> = None;
    let mut clauses: Vec<Vec<i64>> = Vec::new();
    let mut current: Vec<i64> = Vec::new();
    let mut last_line = 0usize;

    'lines: for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if trimmed.starts_with('%') {
            break;
        }
        if trimmed.starts_with('p') {
            if num_vars.is_some() {
                return Err(Error::parse(lineno, "duplicate header"));
            }
            let mut it = trimmed.split_whitespace();
            let (p, fmt) = (it.next(), it.next());
            let v = it.next().and_then(|t| t.parse::<u32>().ok());
            let c = it.next().and_then(|t| t.parse::<usize>().ok());
            if p != Some("p") || fmt != Some("cnf") || v.is_none() || c.is_none() {
                return Err(Error::parse(lineno, "malformed header, expected `p cnf V C`"));
            }
            num_vars = v;
            continue;
        }
        let n = match num_vars {
            Some(n) => n,
            None => return Err(Error::parse(lineno, "clause before `p cnf` header")),
        };
        for tok in trimmed.split_whitespace() {
            if tok == "%" {
                break 'lines;
            }
            let lit: i64 = tok
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid literal `{tok}`")))?;
            if lit == 0 {
                clauses.push(std::mem::take(&mut current));
            } else {
                if lit.unsigned_abs() > n as u64 {
                    return Err(Error::parse(
                        lineno,
                        format!("literal {lit} out of range for {n} variables"),
                    ));
                }
                current.push(lit);
            }
        }
        last_line = lineno;
    }

    let num_vars = num_vars.ok_or_else(|| Error::parse(last_line, "missing `p cnf` header"))?;
    if !current.is_empty() {
        return Err(Error::parse(last_line, "unterminated final clause"));
    }
    Ok(Cnf { num_vars, clauses })
}

/// A generated benchmark: CNF plus its suggested vtree.
#[derive(Debug)]
pub struct GeneratedInstance {
    pub name: String,
    pub cnf: Cnf,
    pub vtree: Vtree,
}

/// N-queens: variable `r*n + c + 1` is "a queen on square (r, c)". Per-row
/// at-least-one plus pairwise at-most-one along rows, columns, and both
/// diagonals.
pub fn gen_nqueens(n: u32) -> Result<GeneratedInstance> {
    if n == 0 {
        return Err(Error::InvalidInput("queens board must be at least 1x1".into()));
    }
    let var = |r: u32, c: u32| (r * n + c + 1) as i64;
    let mut clauses: Vec<Vec<i64>> = Vec::new();
    for r in 0..n {
        clauses.push((0..n).map(|c| var(r, c)).collect());
    }
    let squares: Vec<(u32, u32)> = (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).collect();
    for (i, &(r1, c1)) in squares.iter().enumerate() {
        for &(r2, c2) in &squares[i + 1..] {
            let attack = r1 == r2
                || c1 == c2
                || r1 as i64 - c1 as i64 == r2 as i64 - c2 as i64
                || r1 + c1 == r2 + c2;
            if attack {
                clauses.push(vec![-var(r1, c1), -var(r2, c2)]);
            }
        }
    }
    let num_vars = n * n;
    let vars: Vec<Var> = (1..=num_vars).collect();
    Ok(GeneratedInstance {
        name: format!("queens-{n}"),
        cnf: Cnf::new(num_vars, clauses),
        vtree: Vtree::build_balanced(&vars)?,
    })
}

/// Matchings of the p x q grid graph: one variable per edge (horizontal
/// edges row-major, then vertical), pairwise at-most-one per vertex.
pub fn gen_grid_matching(p: u32, q: u32) -> Result<GeneratedInstance> {
    if p == 0 || q == 0 || p * q < 2 {
        return Err(Error::InvalidInput("grid must contain at least one edge".into()));
    }
    let mut incident: Vec<Vec<i64>> = vec![Vec::new(); (p * q) as usize];
    let vertex = |r: u32, c: u32| (r * q + c) as usize;
    let mut next_var: i64 = 1;
    for r in 0..p {
        for c in 0..q.saturating_sub(1) {
            incident[vertex(r, c)].push(next_var);
            incident[vertex(r, c + 1)].push(next_var);
            next_var += 1;
        }
    }
    for r in 0..p.saturating_sub(1) {
        for c in 0..q {
            incident[vertex(r, c)].push(next_var);
            incident[vertex(r + 1, c)].push(next_var);
            next_var += 1;
        }
    }
    let num_vars = (next_var - 1) as u32;
    let mut clauses: Vec<Vec<i64>> = Vec::new();
    for edges in &incident {
        for (i, &a) in edges.iter().enumerate() {
            for &b in &edges[i + 1..] {
                clauses.push(vec![-a, -b]);
            }
        }
    }
    let vars: Vec<Var> = (1..=num_vars).collect();
    Ok(GeneratedInstance {
        name: format!("grid-{p}x{q}"),
        cnf: Cnf::new(num_vars, clauses),
        vtree: Vtree::build_balanced(&vars)?,
    })
}

/// Matchings of the depth-`j` complete binary tree: edge `i`'s children
/// edges are `2i+1` and `2i+2`. Suggested vtree mirrors the recursive edge
/// layout so the two halves below the root are isomorphic at every level.
pub fn gen_matching_tree(j: u32) -> Result<GeneratedInstance> {
    if j == 0 {
        return Err(Error::InvalidInput("tree depth must be at least 1".into()));
    }
    let num_vars: u32 = (1u32 << (j + 1)) - 2;
    let mut clauses: Vec<Vec<i64>> = vec![vec![-1, -2]];
    for i in 1..=((1i64 << j) - 2) {
        clauses.push(vec![-i, -(2 * i + 1)]);
        clauses.push(vec![-i, -(2 * i + 2)]);
        clauses.push(vec![-(2 * i + 1), -(2 * i + 2)]);
    }

    use crate::vtree::Shape;
    fn block(e1: u32, e2: u32, levels: u32) -> Shape {
        if levels == 1 {
            Shape::node(Shape::Leaf(e1), Shape::Leaf(e2))
        } else {
            Shape::node(
                Shape::node(Shape::Leaf(e1), block(2 * e1 + 1, 2 * e1 + 2, levels - 1)),
                Shape::node(Shape::Leaf(e2), block(2 * e2 + 1, 2 * e2 + 2, levels - 1)),
            )
        }
    }
    Ok(GeneratedInstance {
        name: format!("ftree-{j}"),
        cnf: Cnf::new(num_vars, clauses),
        vtree: Vtree::from_shape(&block(1, 2, j))?,
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CompileStats {
    pub size: u64,
    pub node_count: u64,
    pub apply_calls: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub wall: Duration,
}

/// Compiles a CNF bottom-up: each clause as a literal disjunction chain,
/// clauses conjoined in file order.
pub fn compile_cnf_vs(cnf: &Cnf, mgr: &mut VsManager) -> Result<(VsSdd, CompileStats)> {
    if cnf.num_vars > mgr.vtree().num_vars() {
        return Err(Error::InvalidInput(format!(
            "CNF has {} variables but the vtree covers {}",
            cnf.num_vars,
            mgr.vtree().num_vars()
        )));
    }
    let start = Instant::now();
    let calls0 = mgr.stats.apply_calls;
    let hits0 = mgr.stats.cache_hits;
    let misses0 = mgr.stats.cache_misses;
    let mut f = mgr.constant(true);
    for clause in &cnf.clauses {
        let mut cl = mgr.constant(false);
        for &lit in clause {
            let l = mgr.literal(lit.unsigned_abs() as Var, lit > 0)?;
            cl = mgr.apply(cl, l, Op::Or)?;
        }
        f = mgr.apply(f, cl, Op::And)?;
    }
    let stats = CompileStats {
        size: mgr.size(f),
        node_count: mgr.node_count(f),
        apply_calls: mgr.stats.apply_calls - calls0,
        cache_hits: mgr.stats.cache_hits - hits0,
        cache_misses: mgr.stats.cache_misses - misses0,
        wall: start.elapsed(),
    };
    Ok((f, stats))
}

pub fn compile_cnf_sdd(cnf: &Cnf, mgr: &mut SddManager) -> Result<(SddId, CompileStats)> {
    if cnf.num_vars > mgr.vtree().num_vars() {
        return Err(Error::InvalidInput(format!(
            "CNF has {} variables but the vtree covers {}",
            cnf.num_vars,
            mgr.vtree().num_vars()
        )));
    }
    let start = Instant::now();
    let calls0 = mgr.stats.apply_calls;
    let hits0 = mgr.stats.cache_hits;
    let mut f = mgr.constant(true);
    for clause in &cnf.clauses {
        let mut cl = mgr.constant(false);
        for &lit in clause {
            let l = mgr.literal(lit.unsigned_abs() as Var, lit > 0)?;
            cl = mgr.apply(cl, l, Op::Or);
        }
        f = mgr.apply(f, cl, Op::And);
    }
    let stats = CompileStats {
        size: mgr.size(f),
        node_count: 0,
        apply_calls: mgr.stats.apply_calls - calls0,
        cache_hits: mgr.stats.cache_hits - hits0,
        cache_misses: 0,
        wall: start.elapsed(),
    };
    Ok((f, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_basic_dimacs() {
        let cnf = parse_dimacs("p cnf 3 2\n1 -2 0\n2 3 0\n").unwrap();
        assert_eq!(cnf.num_vars, 3);
        assert_eq!(cnf.clauses, vec![vec![1, -2], vec![2, 3]]);
    }

    #[test]
    fn parse_tolerates_comments_and_percent() {
        let cnf = parse_dimacs("c hello\np cnf 2 9\n1 0 -2 0\n%\njunk after percent\n").unwrap();
        assert_eq!(cnf.clauses, vec![vec![1], vec![-2]]);
        let empty = parse_dimacs("p cnf 0 0\n").unwrap();
        assert_eq!(empty.num_vars, 0);
        assert!(empty.clauses.is_empty());
    }

    #[test]
    fn parse_errors() {
        assert!(parse_dimacs("1 2 0\n").is_err());
        assert!(parse_dimacs("p cnf 2 1\n1 3 0\n").is_err());
        assert!(parse_dimacs("p cnf 2 1\n1 2\n").is_err());
        assert!(parse_dimacs("").is_err());
    }

    #[test]
    fn queens_shapes() {
        let q1 = gen_nqueens(1).unwrap();
        assert_eq!(q1.cnf.num_vars, 1);
        assert_eq!(q1.cnf.clauses, vec![vec![1]]);
        let q4 = gen_nqueens(4).unwrap();
        assert_eq!(q4.cnf.num_vars, 16);
        assert_eq!(q4.vtree.num_vars(), 16);
    }

    #[test]
    fn grid_edge_layout() {
        let g = gen_grid_matching(1, 2).unwrap();
        assert_eq!(g.cnf.num_vars, 1);
        assert!(g.cnf.clauses.is_empty());
        let g22 = gen_grid_matching(2, 2).unwrap();
        assert_eq!(g22.cnf.num_vars, 4);
        assert_eq!(g22.cnf.clauses.len(), 4);
        assert!(gen_grid_matching(1, 1).is_err());
    }

    #[test]
    fn ftree_formula() {
        let f1 = gen_matching_tree(1).unwrap();
        assert_eq!(f1.cnf.num_vars, 2);
        assert_eq!(f1.cnf.clauses, vec![vec![-1, -2]]);
        let f2 = gen_matching_tree(2).unwrap();
        assert_eq!(f2.cnf.num_vars, 6);
        assert_eq!(f2.cnf.clauses.len(), 7);
        // Both halves of the suggested vtree are isomorphic.
        let root = f2.vtree.root();
        assert_eq!(
            f2.vtree.iso_class(f2.vtree.left(root)).unwrap(),
            f2.vtree.iso_class(f2.vtree.right(root)).unwrap()
        );
    }

    #[test]
    fn dimacs_round_trip() {
        let q = gen_nqueens(3).unwrap();
        let text = q.cnf.serialize(&q.name);
        assert_eq!(parse_dimacs(&text).unwrap(), q.cnf);
    }
}
