mod common;

use hiersum::decomposition::ceil_log2;
use hiersum::generators::{gen_mis_reduction, max_independent_set_size, random_digraph, random_tree};
use hiersum::io;
use hiersum::oracle::{brute_force_conflict_free, brute_force_optimal};
use hiersum::weights::{aggregate_with_budget, weight_boxcox_with_floor, WeightOptions};
use hiersum::{
    approximation_bound, build_weight_map, decompose_by_height, decompose_paths, is_conflict_free, is_overlap_free,
    solve, solve_with_mode, weight_absdiff, weight_boxcox, weight_composition, DimensionTree, DpTable, Mode,
    ProductSpace, SolverConfig, WeightFunction,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cfg(k: usize) -> SolverConfig {
    SolverConfig::new(k).unwrap()
}

/// Ancestor test by walking parent links, independent of preorder ranges.
fn ancestor_walk(tree: &DimensionTree, anc: hiersum::NodeId, mut x: hiersum::NodeId) -> bool {
    loop {
        if x == anc {
            return true;
        }
        match tree.parent(x) {
            Some(p) => x = p,
            None => return false,
        }
    }
}

fn random_forest(seed: u64, trees: usize, max_size: usize) -> Vec<DimensionTree> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trees)
        .map(|i| {
            let size = rng.gen_range(1..=max_size);
            let height = rng.gen_range(2..=6);
            random_tree(&mut rng, size, height, &format!("f{i}_")).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn overlap_matches_definition(seed in any::<u64>(), d in 1usize..=3) {
        let inst = common::small_instance(seed, d, 5, 3);
        let s = &inst.space;
        for p in 0..s.len() {
            for q in 0..s.len() {
                let by_walk = (0..d).all(|i| {
                    let t = s.tree(i);
                    let (a, b) = (s.coord(p, i), s.coord(q, i));
                    ancestor_walk(t, a, b) || ancestor_walk(t, b, a)
                });
                prop_assert_eq!(s.overlap_index(p, q), by_walk);
                prop_assert_eq!(s.overlap_index(p, q), s.overlap_index(q, p));
                let sub = (0..d).all(|i| ancestor_walk(s.tree(i), s.coord(p, i), s.coord(q, i)));
                prop_assert_eq!(s.in_subspace_index(q, p), sub);
                if sub {
                    prop_assert!(s.overlap_index(p, q));
                }
            }
        }
    }

    #[test]
    fn children_along_differ_in_one_coordinate(seed in any::<u64>(), d in 1usize..=3) {
        let inst = common::small_instance(seed, d, 5, 3);
        let s = &inst.space;
        for v in 0..s.len() {
            for dim in 0..d {
                for c in s.children_along_index(v, dim) {
                    prop_assert!(c > v);
                    for i in 0..d {
                        if i == dim {
                            prop_assert_eq!(s.tree(i).parent(s.coord(c, i)), Some(s.coord(v, i)));
                        } else {
                            prop_assert_eq!(s.coord(c, i), s.coord(v, i));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn aggregates_sum_subspace_cells(seed in any::<u64>(), d in 1usize..=3) {
        let inst = common::small_instance(seed, d, 5, 3);
        let s = &inst.space;
        let cells = inst.cells.as_ref().unwrap();
        let dense = aggregate_with_budget(cells, s, u64::MAX).unwrap();
        let sparse = aggregate_with_budget(cells, s, 0).unwrap();
        prop_assert!(dense.is_dense() && !sparse.is_dense());
        for v in 0..s.len() {
            let (mut pre, mut cur) = (0.0, 0.0);
            for (leaf, m) in cells.iter() {
                if s.in_subspace_index(leaf, v) {
                    pre += m.pre;
                    cur += m.cur;
                }
            }
            // Integer cells make every summation order exact.
            prop_assert_eq!(dense.get(v).pre, pre);
            prop_assert_eq!(dense.get(v).cur, cur);
            prop_assert_eq!(sparse.get(v).pre.to_bits(), dense.get(v).pre.to_bits());
            prop_assert_eq!(sparse.get(v).cur.to_bits(), dense.get(v).cur.to_bits());
        }
    }

    #[test]
    fn absdiff_triangle_inequality(a in 0.0f64..1e6, b in 0.0f64..1e6, c in 0.0f64..1e6) {
        let (ac, ab, bc) = (weight_absdiff(a, c), weight_absdiff(a, b), weight_absdiff(b, c));
        prop_assert!(ac <= (ab + bc) * (1.0 + 4.0 * f64::EPSILON), "{} > {} + {}", ac, ab, bc);
        prop_assert_eq!(weight_absdiff(a, b), weight_absdiff(b, a));
    }

    #[test]
    fn boxcox_is_continuous_at_zero(a in 0.0f64..1e3, b in 0.0f64..1e3) {
        let at_zero = weight_boxcox(a, b, 0.0).unwrap();
        prop_assert_eq!(at_zero.to_bits(), weight_absdiff(a, b).to_bits());
        let near = weight_boxcox_with_floor(a, b, 1e-9, 1e-9).unwrap();
        prop_assert!((near - at_zero).abs() <= 1e-4 * (1.0 + at_zero));
    }

    #[test]
    fn boxcox_is_nonnegative_and_zero_on_equal(a in 0.0f64..1e4, m in 0.0f64..0.99) {
        prop_assert_eq!(weight_boxcox(a, a, m).unwrap(), 0.0);
        prop_assert!(weight_boxcox(a, a + 1.0, m).unwrap() > 0.0);
    }

    #[test]
    fn composition_invariant_under_power_of_two_scaling(
        l in 0u32..1000, t in 0u32..1000, lt in 1u32..100_000, tt in 1u32..100_000, p in -20i32..20
    ) {
        let f = 2f64.powi(p);
        let (l, t, lt, tt) = (l as f64, t as f64, lt as f64, tt as f64);
        let base = weight_composition(l, t, lt, tt).unwrap();
        prop_assert_eq!(weight_composition(l * f, t, lt * f, tt).unwrap(), base);
        prop_assert_eq!(weight_composition(l, t * f, lt, tt * f).unwrap(), base);
    }

    #[test]
    fn dense_and_sparse_solvers_agree(seed in any::<u64>(), d in 1usize..=3, k in 1usize..=6) {
        let inst = common::small_instance(seed, d, 5, 3);
        let dense = solve_with_mode(&inst.space, &inst.weights, &cfg(k), Mode::Dense).unwrap();
        let sparse = solve_with_mode(&inst.space, &inst.weights.to_sparse(), &cfg(k), Mode::Sparse).unwrap();
        prop_assert_eq!(dense, sparse);
    }

    #[test]
    fn solver_output_is_feasible(seed in any::<u64>(), d in 1usize..=4, k in 1usize..=6) {
        let inst = common::small_instance(seed, d, 4, 3);
        let sol = solve(&inst.space, &inst.weights, &cfg(k)).unwrap();
        prop_assert!(sol.len() <= k);
        prop_assert!(is_overlap_free(&inst.space, &sol.segments).unwrap());
        prop_assert!(is_conflict_free(&inst.space, &sol.segments).unwrap());
        let sum: f64 = sol.indices.iter().map(|&i| inst.weights.get(i)).sum();
        prop_assert_eq!(sum, sol.total_weight);
        prop_assert!(sol.indices.iter().all(|&i| inst.weights.get(i) > 0.0));
    }

    #[test]
    fn every_row_stays_in_its_subspace(seed in any::<u64>(), d in 1usize..=3, k in 1usize..=4) {
        let inst = common::small_instance(seed, d, 4, 3);
        let table = DpTable::build(&inst.space, &inst.weights, &cfg(k), Mode::Dense).unwrap();
        for v in 0..inst.space.len() {
            let mut prev = 0.0;
            for j in 0..=k {
                let set = table.set(v, j);
                let e = table.entry(v, j);
                prop_assert_eq!(set.len(), e.card as usize);
                prop_assert!(set.len() <= j);
                prop_assert!(set.iter().all(|&x| inst.space.in_subspace_index(x, v)));
                let w: f64 = set.iter().map(|&x| inst.weights.get(x)).sum();
                prop_assert_eq!(w, e.weight);
                prop_assert!(e.weight >= prev);
                prev = e.weight;
            }
        }
    }

    #[test]
    fn weight_is_monotone_in_k(seed in any::<u64>(), d in 1usize..=3) {
        let inst = common::small_instance(seed, d, 5, 3);
        let mut prev = 0.0;
        for k in 1..=8 {
            let w = solve(&inst.space, &inst.weights, &cfg(k)).unwrap().total_weight;
            prop_assert!(w >= prev);
            prev = w;
        }
    }

    #[test]
    fn power_of_two_scaling_is_equivariant(seed in any::<u64>(), d in 1usize..=3, k in 1usize..=5, p in -30i32..30) {
        let inst = common::small_instance(seed, d, 5, 3);
        let f = 2f64.powi(p);
        let base = solve(&inst.space, &inst.weights, &cfg(k)).unwrap();
        let scaled = solve(&inst.space, &inst.weights.scaled(f).unwrap(), &cfg(k)).unwrap();
        prop_assert_eq!(&scaled.indices, &base.indices);
        prop_assert_eq!(scaled.total_weight, base.total_weight * f);
    }

    #[test]
    fn dense_budget_does_not_change_the_answer(seed in any::<u64>(), d in 1usize..=3, k in 1usize..=5) {
        let inst = common::small_instance(seed, d, 5, 3);
        let cells = inst.cells.as_ref().unwrap();
        let mut opts = WeightOptions::new(WeightFunction::AbsDiff);
        opts.dense_budget = 0;
        let sparse_w = hiersum::weights::build_weight_map_with(cells, &inst.space, &opts).unwrap();
        let dense_w = build_weight_map(cells, &inst.space, WeightFunction::AbsDiff).unwrap();
        prop_assert!(!sparse_w.is_dense() && dense_w.is_dense());
        prop_assert_eq!(
            solve(&inst.space, &sparse_w, &cfg(k)).unwrap(),
            solve(&inst.space, &dense_w, &cfg(k)).unwrap()
        );
    }

    #[test]
    fn two_dimensions_are_solved_exactly(seed in any::<u64>(), k in 1usize..=4) {
        let inst = common::small_instance(seed, 2, 6, 3);
        let sol = solve(&inst.space, &inst.weights, &cfg(k)).unwrap();
        let opt = brute_force_optimal(&inst.space, &inst.weights, k).unwrap();
        prop_assert_eq!(sol.total_weight, opt.total_weight);
    }

    #[test]
    fn conflict_free_optimum_is_reached(seed in any::<u64>(), d in 3usize..=4, k in 1usize..=3) {
        let inst = common::small_instance(seed, d, 3, 2);
        let sol = solve(&inst.space, &inst.weights, &cfg(k)).unwrap();
        let cf = brute_force_conflict_free(&inst.space, &inst.weights, k).unwrap();
        prop_assert_eq!(sol.total_weight, cf.total_weight);
        let opt = brute_force_optimal(&inst.space, &inst.weights, k).unwrap();
        prop_assert!(sol.total_weight * approximation_bound(&inst.space) >= opt.total_weight);
    }

    #[test]
    fn mis_reduction_round_trip(seed in any::<u64>()) {
        let g = random_digraph(seed, 5, 6).unwrap();
        let inst = gen_mis_reduction(&g, 0.5).unwrap();
        let opt = brute_force_optimal(&inst.space, &inst.weights, inst.k).unwrap();
        let mis = max_independent_set_size(&g).unwrap() as f64;
        prop_assert_eq!(opt.total_weight, mis + 1.5 * g.edges().len() as f64);
    }

    #[test]
    fn path_decompositions_are_valid(seed in any::<u64>(), trees in 1usize..=4) {
        let forest = random_forest(seed, trees, 20);
        let leaves = common::forest_leaves(&forest);
        let d = decompose_paths(&forest).unwrap();
        common::check_decomposition(&forest, &d).unwrap();
        prop_assert!(d.group_count() <= ceil_log2(leaves + 1));
        let h = decompose_by_height(&forest).unwrap();
        common::check_decomposition(&forest, &h).unwrap();
        prop_assert_eq!(h.group_count(), forest.iter().map(DimensionTree::height).max().unwrap());
    }

    #[test]
    fn csv_round_trip_is_byte_stable(seed in any::<u64>(), d in 1usize..=3) {
        let inst = common::small_instance(seed, d, 6, 3);
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        let hier_a = io::write_space(&inst.space, &a).unwrap();
        io::write_facts_file(&inst.space, inst.cells.as_ref().unwrap(), &a.join("facts.csv")).unwrap();
        let (space, cells) = io::ingest(&hier_a, &a.join("facts.csv")).unwrap();
        let hier_b = io::write_space(&space, &b).unwrap();
        io::write_facts_file(&space, &cells, &b.join("facts.csv")).unwrap();
        for (x, y) in hier_a.iter().zip(&hier_b) {
            prop_assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
        prop_assert_eq!(std::fs::read(a.join("facts.csv")).unwrap(), std::fs::read(b.join("facts.csv")).unwrap());
        prop_assert_eq!(space.len(), inst.space.len());
        prop_assert_eq!(
            cells.iter().collect::<Vec<_>>(),
            inst.cells.as_ref().unwrap().iter().collect::<Vec<_>>()
        );
    }
}

#[test]
fn single_tree_is_solved_exactly() {
    for seed in 0..50 {
        let inst = common::small_instance(seed, 1, 12, 4);
        for k in 1..=4 {
            let sol = solve(&inst.space, &inst.weights, &cfg(k)).unwrap();
            let opt = brute_force_optimal(&inst.space, &inst.weights, k).unwrap();
            assert_eq!(sol.total_weight, opt.total_weight, "seed {seed} k {k}");
        }
    }
}

#[test]
fn space_size_is_product_of_tree_sizes() {
    let inst = common::small_instance(3, 3, 6, 3);
    let product: u64 = inst.space.trees().iter().map(|t| t.len() as u64).product();
    assert_eq!(inst.space.len(), product);
    assert!(ProductSpace::new(vec![]).is_err());
}
