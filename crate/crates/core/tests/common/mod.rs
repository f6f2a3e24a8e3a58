#![allow(dead_code)]

use std::collections::BTreeSet;

use hiersum::decomposition::PathDecomposition;
use hiersum::generators::{gen_random, GeneratedInstance, RandomSpec};
use hiersum::{DimensionTree, ProductSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random instance with `d` trees of 2..=`max_size` nodes; parameters drawn from `seed`.
pub fn small_instance(seed: u64, d: usize, max_size: usize, max_height: usize) -> GeneratedInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let tree_sizes = (0..d).map(|_| rng.gen_range(2..=max_size)).collect();
    let cell_density = rng.gen_range(0.2..=1.0);
    gen_random(&RandomSpec { tree_sizes, max_height, cell_density, seed }).unwrap()
}

/// Exact-size random instance for timing runs.
pub fn sized_instance(sizes: &[usize], seed: u64) -> GeneratedInstance {
    gen_random(&RandomSpec { tree_sizes: sizes.to_vec(), max_height: 6, cell_density: 0.3, seed }).unwrap()
}

pub fn forest_leaves(forest: &[DimensionTree]) -> usize {
    forest.iter().map(DimensionTree::leaf_count).sum()
}

pub fn max_tree_size(space: &ProductSpace) -> usize {
    space.trees().iter().map(DimensionTree::len).max().unwrap()
}

/// Checks that `d` partitions the forest into downward paths with no two
/// overlapping paths in one group.
pub fn check_decomposition(forest: &[DimensionTree], d: &PathDecomposition) -> Result<(), String> {
    let mut seen = BTreeSet::new();
    for p in d.paths() {
        if p.is_empty() {
            return Err("empty path".into());
        }
        let t = &forest[p.tree];
        if p.nodes.windows(2).any(|w| t.parent(w[1]) != Some(w[0])) {
            return Err(format!("path {:?} is not a downward chain", p.nodes));
        }
        for &n in &p.nodes {
            if !seen.insert((p.tree, n)) {
                return Err(format!("node {n:?} of tree {} covered twice", p.tree));
            }
        }
    }
    let total: usize = forest.iter().map(DimensionTree::len).sum();
    if seen.len() != total {
        return Err(format!("{} of {total} nodes covered", seen.len()));
    }
    for (gi, g) in d.groups.iter().enumerate() {
        for (i, a) in g.iter().enumerate() {
            if g[i + 1..].iter().any(|b| a.overlaps(b, forest)) {
                return Err(format!("overlapping paths in group {gi}"));
            }
        }
    }
    Ok(())
}
