//! Partitions of a forest's nodes into groups of pairwise non-overlapping
//! downward paths.
//!
//! [`decompose_paths`] splits at the root path of the median leaf and recurses
//! on the two halves, giving `ceil(log2(leaves + 1))` groups.
//! [`decompose_by_height`] strips one root-to-leaf path per root per round and
//! needs at most as many rounds as the forest is high.

use crate::error::{Error, Result};
use crate::space::{DimensionTree, NodeId, ProductSpace};

/// A downward path inside one tree of the forest: each node is a child of the previous one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreePath {
    pub tree: usize,
    pub nodes: Vec<NodeId>,
}

impl TreePath {
    /// True iff some node of `self` overlaps some node of `other`. Paths in
    /// different trees never overlap.
    pub fn overlaps(&self, other: &TreePath, forest: &[DimensionTree]) -> bool {
        if self.tree != other.tree {
            return false;
        }
        let t = &forest[self.tree];
        self.nodes
            .iter()
            .any(|&p| other.nodes.iter().any(|&q| t.is_ancestor_or_self(p, q) || t.is_ancestor_or_self(q, p)))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PathDecomposition {
    pub groups: Vec<Vec<TreePath>>,
}

impl PathDecomposition {
    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn non_empty_groups(&self) -> usize {
        self.groups.iter().filter(|g| !g.is_empty()).count()
    }

    pub fn paths(&self) -> impl Iterator<Item = &TreePath> {
        self.groups.iter().flatten()
    }
}

/// `ceil(log2(x))` for `x >= 1`.
pub fn ceil_log2(x: usize) -> usize {
    assert!(x >= 1);
    (usize::BITS - (x - 1).leading_zeros()) as usize
}

fn check_forest(forest: &[DimensionTree]) -> Result<()> {
    if forest.is_empty() {
        Err(Error::Input("cannot decompose an empty forest".into()))
    } else {
        Ok(())
    }
}

type Root = (usize, NodeId);

pub fn decompose_paths(forest: &[DimensionTree]) -> Result<PathDecomposition> {
    check_forest(forest)?;
    let roots: Vec<Root> = (0..forest.len()).map(|t| (t, forest[t].root())).collect();
    Ok(PathDecomposition { groups: split_at_median(forest, &roots) })
}

/// `roots` lists whole subtrees in preorder; together they form the current forest.
fn split_at_median(forest: &[DimensionTree], roots: &[Root]) -> Vec<Vec<TreePath>> {
    let leaves: usize = roots.iter().map(|&(t, r)| forest[t].leaves_below(r)).sum();
    if leaves == 0 {
        return Vec::new();
    }
    let mut target = leaves.div_ceil(2);

    let mut left: Vec<Root> = Vec::new();
    let mut right_levels: Vec<Vec<Root>> = Vec::new();
    let mut pos = 0;
    while target > forest[roots[pos].0].leaves_below(roots[pos].1) {
        target -= forest[roots[pos].0].leaves_below(roots[pos].1);
        left.push(roots[pos]);
        pos += 1;
    }
    let (tree_idx, mut cur) = roots[pos];
    let tree = &forest[tree_idx];
    let mut path = vec![cur];
    while !tree.is_leaf(cur) {
        let children = tree.children(cur);
        let mut chosen = children.len();
        for (i, &c) in children.iter().enumerate() {
            if target <= tree.leaves_below(c) {
                chosen = i;
                break;
            }
            target -= tree.leaves_below(c);
        }
        left.extend(children[..chosen].iter().map(|&c| (tree_idx, c)));
        right_levels.push(children[chosen + 1..].iter().map(|&c| (tree_idx, c)).collect());
        cur = children[chosen];
        path.push(cur);
    }
    // Preorder after the median leaf: deeper right siblings first, then later roots.
    let mut right: Vec<Root> = right_levels.into_iter().rev().flatten().collect();
    right.extend_from_slice(&roots[pos + 1..]);

    let median = TreePath { tree: tree_idx, nodes: path };
    if left.is_empty() && right.is_empty() {
        return vec![vec![median]];
    }
    let count = ceil_log2(leaves + 1);
    let mut groups = vec![Vec::new(); count];
    for side in [split_at_median(forest, &left), split_at_median(forest, &right)] {
        debug_assert!(side.len() < count);
        for (i, g) in side.into_iter().enumerate() {
            groups[i].extend(g);
        }
    }
    groups[count - 1].push(median);
    groups
}

/// One group per height level; trailing groups are empty when the stripping
/// finishes before the height is reached.
pub fn decompose_by_height(forest: &[DimensionTree]) -> Result<PathDecomposition> {
    check_forest(forest)?;
    let height = forest.iter().map(DimensionTree::height).max().unwrap_or(0);
    let mut groups = Vec::with_capacity(height);
    let mut roots: Vec<Root> = (0..forest.len()).map(|t| (t, forest[t].root())).collect();
    while !roots.is_empty() {
        let mut group = Vec::with_capacity(roots.len());
        let mut rest = Vec::new();
        for (t, root) in roots {
            let tree = &forest[t];
            let mut nodes = vec![root];
            let mut cur = root;
            while let Some((&first, others)) = tree.children(cur).split_first() {
                rest.extend(others.iter().map(|&c| (t, c)));
                nodes.push(first);
                cur = first;
            }
            group.push(TreePath { tree: t, nodes });
        }
        groups.push(group);
        roots = rest;
    }
    debug_assert!(groups.len() <= height);
    groups.resize(height, Vec::new());
    Ok(PathDecomposition { groups })
}

/// Guaranteed approximation factor of the solver on `space`:
/// `min(ceil(log2(m + 1)), h)^(d - 2)` with `m` the largest tree size and `h`
/// the largest tree height; `1` for `d <= 2`.
pub fn approximation_bound(space: &ProductSpace) -> f64 {
    let d = space.dims();
    if d <= 2 {
        return 1.0;
    }
    let m = space.trees().iter().map(DimensionTree::len).max().unwrap_or(1);
    let h = space.trees().iter().map(DimensionTree::height).max().unwrap_or(1);
    (ceil_log2(m + 1).min(h) as f64).powi(d as i32 - 2)
}
