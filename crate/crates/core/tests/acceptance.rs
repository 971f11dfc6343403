//! Acceptance suite. Each criterion prints a single pass/fail line; a
//! failed criterion also panics with the offending detail.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vssdd::export::serialize_diagram;
use vssdd::frontend::{
    compile_cnf_sdd, compile_cnf_vs, gen_grid_matching, gen_matching_tree, gen_nqueens, Cnf,
};
use vssdd::oracle::{
    brute_matchings, brute_queens, essential_vtree_node, grid_edges, table_of_cnf, table_of_sdd,
    table_of_vs, tree_edges,
};
use vssdd::queries::{self, CountContext};
use vssdd::vssdd::audit_identical_vtree_rule;
use vssdd::{Mode, Op, SddManager, Var, VsManager, VsSdd, Vtree};

/// Frozen regression value: VS-SDD size growth per level of the matching
/// family on its recursive vtree.
const FTREE_SIZE_STEP: u64 = 20;
/// Frozen regression value: trimmed-apply cache-miss growth per level for
/// the structured build of the matching family.
const FTREE_MISS_STEP: u64 = 97;

fn report(criterion: u32, name: &str, body: impl FnOnce()) {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(()) => println!("criterion {criterion} ({name}): pass"),
        Err(e) => {
            println!("criterion {criterion} ({name}): fail");
            std::panic::resume_unwind(e);
        }
    }
}

fn random_cnf(rng: &mut ChaCha8Rng, num_vars: u32, num_clauses: usize) -> Cnf {
    let clauses = (0..num_clauses)
        .map(|_| {
            let len = rng.gen_range(1..=3usize);
            (0..len)
                .map(|_| {
                    let v = rng.gen_range(1..=num_vars) as i64;
                    if rng.gen() {
                        v
                    } else {
                        -v
                    }
                })
                .collect()
        })
        .collect();
    Cnf::new(num_vars, clauses)
}

fn random_vtree(rng: &mut ChaCha8Rng, num_vars: u32) -> Vtree {
    let vars: Vec<Var> = (1..=num_vars).collect();
    if rng.gen() {
        Vtree::build_balanced(&vars).unwrap()
    } else {
        Vtree::build_right_linear(&vars).unwrap()
    }
}

#[test]
fn acceptance_1_oracle_equivalence() {
    report(1, "oracle equivalence on random CNFs", || {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let configs = [
            (Mode::Trimmed, true),
            (Mode::Trimmed, false),
            (Mode::Normalized, true),
            (Mode::Normalized, false),
        ];
        for i in 0..500 {
            let num_vars = rng.gen_range(3..=10);
            let n_clauses = rng.gen_range(2..=15);
            let cnf = random_cnf(&mut rng, num_vars, n_clauses);
            let vtree = Arc::new(random_vtree(&mut rng, num_vars));
            let (mode, compress) = configs[i % configs.len()];
            let mut m = VsManager::new(vtree, mode, compress);
            let (f, _) = compile_cnf_vs(&cnf, &mut m).unwrap();
            let expect = table_of_cnf(&cnf).unwrap();
            assert_eq!(table_of_vs(&m, f).unwrap(), expect, "cnf {i}");
            let mut ctx = CountContext::new();
            assert_eq!(
                ctx.count_all(&m, f).unwrap(),
                BigUint::from(expect.count()),
                "count of cnf {i}"
            );
        }
    });
}

#[test]
fn acceptance_2_apply_semantics() {
    report(2, "pointwise apply semantics", || {
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        for i in 0..300 {
            let num_vars = rng.gen_range(3..=8);
            let vtree = Arc::new(random_vtree(&mut rng, num_vars));
            let mut m = VsManager::new(vtree, Mode::Trimmed, true);
            let n_clauses = rng.gen_range(1..=8);
            let cnf_f = random_cnf(&mut rng, num_vars, n_clauses);
            let n_clauses = rng.gen_range(1..=8);
            let cnf_g = random_cnf(&mut rng, num_vars, n_clauses);
            let (f, _) = compile_cnf_vs(&cnf_f, &mut m).unwrap();
            let (g, _) = compile_cnf_vs(&cnf_g, &mut m).unwrap();
            let tf = table_of_cnf(&cnf_f).unwrap();
            let tg = table_of_cnf(&cnf_g).unwrap();
            for op in [Op::And, Op::Or, Op::Xor] {
                let h = m.apply(f, g, op).unwrap();
                assert_eq!(
                    table_of_vs(&m, h).unwrap(),
                    tf.combine(&tg, op).unwrap(),
                    "pair {i} op {op:?}"
                );
            }
        }
    });
}

#[test]
fn acceptance_3_canonicity() {
    report(3, "canonicity across construction orders", || {
        let mut rng = ChaCha8Rng::seed_from_u64(303);
        for i in 0..100 {
            let num_vars = rng.gen_range(3..=8);
            let n_clauses = rng.gen_range(2..=10);
            let cnf = random_cnf(&mut rng, num_vars, n_clauses);
            let vtree = Arc::new(random_vtree(&mut rng, num_vars));
            let mut m = VsManager::new(vtree, Mode::Trimmed, true);
            let (f1, _) = compile_cnf_vs(&cnf, &mut m).unwrap();

            let mut shuffled = cnf.clone();
            shuffled.clauses.reverse();
            let mid = shuffled.clauses.len() / 2;
            if shuffled.clauses.len() > 2 {
                shuffled.clauses.swap(0, mid);
            }
            let (f2, _) = compile_cnf_vs(&shuffled, &mut m).unwrap();
            assert_eq!(f1, f2, "clause order changed the diagram, cnf {i}");

            // Shannon expansion on a random variable is a third
            // construction path.
            let x = rng.gen_range(1..=num_vars) as i64;
            let fx = m.condition(f1, &[x]).unwrap();
            let fnx = m.condition(f1, &[-x]).unwrap();
            let lit = m.literal(x as Var, true).unwrap();
            let nlit = m.literal(x as Var, false).unwrap();
            let hi = m.apply(lit, fx, Op::And).unwrap();
            let lo = m.apply(nlit, fnx, Op::And).unwrap();
            let f3 = m.apply(hi, lo, Op::Or).unwrap();
            assert_eq!(f1, f3, "Shannon expansion changed the diagram, cnf {i}");

            // EQ by identity agrees with two-way entailment.
            let n_clauses = rng.gen_range(2..=10);
            let cnf_g = random_cnf(&mut rng, num_vars, n_clauses);
            let (g, _) = compile_cnf_vs(&cnf_g, &mut m).unwrap();
            let eq_identity = queries::equivalent(&mut m, f1, g).unwrap();
            let eq_se = queries::entails(&mut m, f1, g).unwrap()
                && queries::entails(&mut m, g, f1).unwrap();
            assert_eq!(eq_identity, eq_se, "EQ disagreement, cnf {i}");
        }
    });
}

#[test]
fn acceptance_4_size_inequality() {
    report(4, "VS-SDD size never exceeds SDD size", || {
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        let check = |cnf: &Cnf, vtree: Arc<Vtree>| {
            let mut vm = VsManager::new(vtree.clone(), Mode::Trimmed, true);
            let (f, vstats) = compile_cnf_vs(cnf, &mut vm).unwrap();
            let mut sm = SddManager::new(vtree);
            let (_, sstats) = compile_cnf_sdd(cnf, &mut sm).unwrap();
            assert!(
                vstats.size <= sstats.size,
                "V={} > S={}",
                vstats.size,
                sstats.size
            );
            if sstats.size > 0 {
                assert!(vstats.size as f64 / sstats.size as f64 * 100.0 <= 100.0);
            }
            let _ = f;
        };
        for _ in 0..100 {
            let num_vars = rng.gen_range(3..=9);
            let n_clauses = rng.gen_range(2..=12);
            let cnf = random_cnf(&mut rng, num_vars, n_clauses);
            let vtree = Arc::new(random_vtree(&mut rng, num_vars));
            check(&cnf, vtree);
        }
        for inst in [
            gen_nqueens(4).unwrap(),
            gen_nqueens(5).unwrap(),
            gen_grid_matching(2, 2).unwrap(),
            gen_grid_matching(2, 3).unwrap(),
            gen_matching_tree(2).unwrap(),
            gen_matching_tree(3).unwrap(),
            gen_matching_tree(4).unwrap(),
        ] {
            check(&inst.cnf, Arc::new(inst.vtree));
        }
    });
}

#[test]
fn acceptance_5_shifted_block_sharing() {
    report(5, "shifted copies share one structure", || {
        let mut rng = ChaCha8Rng::seed_from_u64(505);
        let mut done = 0;
        while done < 50 {
            let m_block = rng.gen_range(2..=4u32);
            let vtree = Arc::new(
                Vtree::build_balanced(&(1..=2 * m_block).collect::<Vec<Var>>()).unwrap(),
            );
            let root = vtree.root();
            let delta = vtree
                .shift_delta(vtree.left(root), vtree.right(root))
                .unwrap()
                .expect("halves of an even balanced vtree are isomorphic");

            let n_clauses = rng.gen_range(2..=6);
            let h = random_cnf(&mut rng, m_block, n_clauses);
            if table_of_cnf(&h).unwrap().is_constant().is_some() {
                continue;
            }
            let shifted = Cnf::new(
                2 * m_block,
                h.clauses
                    .iter()
                    .map(|c| {
                        c.iter()
                            .map(|&l| l + l.signum() * m_block as i64)
                            .collect()
                    })
                    .collect(),
            );
            let original = Cnf::new(2 * m_block, h.clauses.clone());

            let mut m = VsManager::new(vtree.clone(), Mode::Trimmed, true);
            let (f, _) = compile_cnf_vs(&original, &mut m).unwrap();
            let (g, _) = compile_cnf_vs(&shifted, &mut m).unwrap();
            assert_eq!(f.structure, g.structure, "structures differ");
            assert_eq!(
                vtree.shift_delta(f.offset, g.offset).unwrap(),
                Some(delta),
                "offsets {} and {} are not shifted by {delta}",
                f.offset,
                g.offset
            );
            done += 1;
        }
    });
}

/// Conjunction of all matching clauses among edges strictly below edge `i`
/// of the tree family, built by structural recursion so the two halves are
/// shifted copies.
fn build_ftree_block(m: &mut VsManager, i: u32, levels: u32) -> VsSdd {
    if levels <= 1 {
        return m.constant(true);
    }
    let (c1, c2) = (2 * i + 1, 2 * i + 2);
    let ni = m.literal(i, false).unwrap();
    let nc1 = m.literal(c1, false).unwrap();
    let nc2 = m.literal(c2, false).unwrap();
    let a = m.apply(ni, nc1, Op::Or).unwrap();
    let b = m.apply(ni, nc2, Op::Or).unwrap();
    let c = m.apply(nc1, nc2, Op::Or).unwrap();
    let ab = m.apply(a, b, Op::And).unwrap();
    let abc = m.apply(ab, c, Op::And).unwrap();
    let l = build_ftree_block(m, c1, levels - 1);
    let r = build_ftree_block(m, c2, levels - 1);
    let lr = m.apply(l, r, Op::And).unwrap();
    m.apply(abc, lr, Op::And).unwrap()
}

#[test]
fn acceptance_6_separation() {
    report(6, "linear VS-SDD growth vs exponential SDD growth", || {
        let mut vs_sizes = Vec::new();
        let mut misses = Vec::new();
        for j in 2u32..=8 {
            let inst = gen_matching_tree(j).unwrap();
            let vtree = Arc::new(inst.vtree);

            let mut sm = SddManager::new(vtree.clone());
            let (_, sstats) = compile_cnf_sdd(&inst.cnf, &mut sm).unwrap();
            assert!(
                sstats.size >= (1u64 << j) - 1,
                "SDD size {} below 2^{j}-1",
                sstats.size
            );

            let mut vm = VsManager::new(vtree.clone(), Mode::Trimmed, true);
            let (_, vstats) = compile_cnf_vs(&inst.cnf, &mut vm).unwrap();
            vs_sizes.push(vstats.size);

            // Structured build: the two halves are substitution-equivalent,
            // so the offset-free apply cache collapses their recursions.
            let mut mm = VsManager::new(vtree, Mode::Trimmed, true);
            let f = build_ftree_block(&mut mm, 1, j);
            let g = build_ftree_block(&mut mm, 2, j);
            let nx1 = mm.literal(1, false).unwrap();
            let nx2 = mm.literal(2, false).unwrap();
            let top = mm.apply(nx1, nx2, Op::Or).unwrap();
            let fg = mm.apply(f, g, Op::And).unwrap();
            let whole = mm.apply(top, fg, Op::And).unwrap();
            assert_eq!(vstats.size, mm.size(whole), "build paths disagree on size");
            misses.push(mm.stats.cache_misses);
        }
        // vs_sizes[i] is size at j = i + 2.
        for j in 4u32..=8 {
            let i = (j - 2) as usize;
            assert_eq!(
                vs_sizes[i] - vs_sizes[i - 1],
                FTREE_SIZE_STEP,
                "size step at j={j}"
            );
        }
        for j in 5u32..=8 {
            let i = (j - 2) as usize;
            assert_eq!(
                misses[i] - misses[i - 1],
                FTREE_MISS_STEP,
                "cache-miss step at j={j}"
            );
        }
    });
}

#[test]
fn acceptance_7_running_example() {
    report(7, "running example sizes, count, and sharing", || {
        let vtree = Arc::new(Vtree::build_balanced(&[1, 2, 3, 4]).unwrap());
        let mut m = VsManager::new(vtree.clone(), Mode::Trimmed, true);
        let a = m.literal(1, true).unwrap();
        let b = m.literal(2, true).unwrap();
        let c = m.literal(3, true).unwrap();
        let d = m.literal(4, true).unwrap();
        let ab = m.apply(a, b, Op::And).unwrap();
        let bc = m.apply(b, c, Op::And).unwrap();
        let cd = m.apply(c, d, Op::And).unwrap();
        let t = m.apply(ab, bc, Op::Or).unwrap();
        let f = m.apply(t, cd, Op::Or).unwrap();

        let mut sm = SddManager::new(vtree);
        let s = m.to_baseline_sdd(f, &mut sm).unwrap();
        assert_eq!(sm.size(s), 9);
        assert_eq!(sm.model_count(s), BigUint::from(8u32));
        let mut ctx = CountContext::new();
        assert_eq!(ctx.count_all(&m, f).unwrap(), BigUint::from(8u32));

        let offsets = vssdd::vssdd::reachable_offsets(&m, &[f]);
        let shared: Vec<_> = offsets
            .iter()
            .filter(|(s, offs)| m.elements(**s).is_some() && offs.len() == 2)
            .collect();
        assert_eq!(shared.len(), 1, "exactly one structure is shared");
        assert_eq!(
            shared[0].1.iter().copied().collect::<Vec<_>>(),
            vec![2, 5],
            "shared at offsets 2 and 5"
        );
    });
}

#[test]
fn acceptance_8_generator_counts() {
    report(8, "generator counts match combinatorial oracles", || {
        for (n, expect) in [(1u32, 1u64), (4, 2), (5, 10), (6, 4)] {
            assert_eq!(brute_queens(n), expect, "brute queens {n}");
            let inst = gen_nqueens(n).unwrap();
            let mut m = VsManager::new(Arc::new(inst.vtree), Mode::Trimmed, true);
            let (f, _) = compile_cnf_vs(&inst.cnf, &mut m).unwrap();
            let mut ctx = CountContext::new();
            assert_eq!(
                ctx.count_all(&m, f).unwrap(),
                BigUint::from(expect),
                "compiled queens {n}"
            );
        }
        assert_eq!(brute_matchings(&grid_edges(2, 2)).unwrap(), 7);
        let grid = gen_grid_matching(2, 2).unwrap();
        let mut m = VsManager::new(Arc::new(grid.vtree), Mode::Trimmed, true);
        let (f, _) = compile_cnf_vs(&grid.cnf, &mut m).unwrap();
        assert_eq!(
            CountContext::new().count_all(&m, f).unwrap(),
            BigUint::from(7u32)
        );
        assert_eq!(brute_matchings(&tree_edges(2)).unwrap(), 15);
        let f2 = gen_matching_tree(2).unwrap();
        let mut m = VsManager::new(Arc::new(f2.vtree), Mode::Trimmed, true);
        let (f, _) = compile_cnf_vs(&f2.cnf, &mut m).unwrap();
        assert_eq!(
            CountContext::new().count_all(&m, f).unwrap(),
            BigUint::from(15u32)
        );
    });
}

#[test]
fn acceptance_9_transformations() {
    report(9, "transformation identities", || {
        let mut rng = ChaCha8Rng::seed_from_u64(909);
        for i in 0..100 {
            let num_vars = rng.gen_range(3..=8);
            let n_clauses = rng.gen_range(2..=10);
            let cnf = random_cnf(&mut rng, num_vars, n_clauses);
            let vtree = Arc::new(random_vtree(&mut rng, num_vars));
            let mut m = VsManager::new(vtree, Mode::Trimmed, true);
            let (f, _) = compile_cnf_vs(&cnf, &mut m).unwrap();
            let table = table_of_cnf(&cnf).unwrap();
            let x = rng.gen_range(1..=num_vars);

            // Shannon counting identity over M-1 free variables.
            let mut ctx = CountContext::new();
            let fx = m.condition(f, &[x as i64]).unwrap();
            let fnx = m.condition(f, &[-(x as i64)]).unwrap();
            let cx = ctx.count(&m, fx, num_vars - 1).unwrap();
            let cnx = ctx.count(&m, fnx, num_vars - 1).unwrap();
            assert_eq!(cx + cnx, BigUint::from(table.count()), "Shannon, cnf {i}");

            // Negation is an involution and complements the count.
            let nf = m.negate(f).unwrap();
            assert_eq!(m.negate(nf).unwrap(), f, "involution, cnf {i}");
            assert_eq!(
                ctx.count_all(&m, nf).unwrap(),
                BigUint::from((1u64 << num_vars) - table.count()),
                "complement count, cnf {i}"
            );

            // SFO and conditioning agree with the oracle.
            let forgotten = queries::forget_singleton(&mut m, f, x).unwrap();
            assert_eq!(
                table_of_vs(&m, forgotten).unwrap(),
                table.forget(x),
                "forget, cnf {i}"
            );
            let term: Vec<i64> = {
                let a = rng.gen_range(1..=num_vars) as i64;
                let mut b = rng.gen_range(1..=num_vars) as i64;
                if b == a {
                    b = if a == num_vars as i64 { 1 } else { a + 1 };
                }
                vec![
                    if rng.gen() { a } else { -a },
                    if rng.gen() { b } else { -b },
                ]
            };
            let conditioned = m.condition(f, &term).unwrap();
            assert_eq!(
                table_of_vs(&m, conditioned).unwrap(),
                table.restrict_term(&term),
                "condition, cnf {i}"
            );
        }
    });
}

#[test]
fn acceptance_10_lemma3_and_vtree_rule_audit() {
    report(10, "root offsets and the identical vtree rule", || {
        let mut rng = ChaCha8Rng::seed_from_u64(1010);
        for i in 0..150 {
            let num_vars = rng.gen_range(3..=12);
            let n_clauses = rng.gen_range(2..=12);
            let cnf = random_cnf(&mut rng, num_vars, n_clauses);
            let vtree = Arc::new(random_vtree(&mut rng, num_vars));
            let mut m = VsManager::new(vtree.clone(), Mode::Trimmed, true);
            let (f, _) = compile_cnf_vs(&cnf, &mut m).unwrap();
            if f.is_constant() {
                continue;
            }
            let table = table_of_vs(&m, f).unwrap();
            assert_eq!(
                Some(f.offset),
                essential_vtree_node(&table, &vtree),
                "root offset is not the essential node, cnf {i}"
            );
            assert!(
                audit_identical_vtree_rule(&m, &[f]).is_empty(),
                "identical vtree rule violated, cnf {i}"
            );
        }
    });
}

// Auxiliary end-to-end sanity used by the suite: the baseline SDD and
// serialization agree with the compiled diagrams above.
#[test]
fn serialized_diagrams_survive_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(7777);
    for _ in 0..20 {
        let num_vars = rng.gen_range(3..=8);
        let n_clauses = rng.gen_range(2..=8);
        let cnf = random_cnf(&mut rng, num_vars, n_clauses);
        let vtree = Arc::new(random_vtree(&mut rng, num_vars));
        let mut m = VsManager::new(vtree.clone(), Mode::Trimmed, true);
        let (f, _) = compile_cnf_vs(&cnf, &mut m).unwrap();
        let text = serialize_diagram(&m, f);
        let (m2, f2) = vssdd::export::parse_diagram(&text).unwrap();
        assert_eq!(serialize_diagram(&m2, f2), text);
        assert_eq!(table_of_vs(&m2, f2).unwrap(), table_of_cnf(&cnf).unwrap());
        let mut sm = SddManager::new(vtree);
        let s = m.to_baseline_sdd(f, &mut sm).unwrap();
        assert_eq!(table_of_sdd(&sm, s).unwrap(), table_of_cnf(&cnf).unwrap());
    }
}
