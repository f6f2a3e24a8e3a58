//! Exhaustive reference checks for small instances.
//!
//! Everything here follows the definitions literally (pairwise overlap scans,
//! subset enumeration for conflicts, branch-and-bound enumeration for optima)
//! and shares no code with the solver's dynamic program.

use crate::error::{Error, Result};
use crate::solver::Solution;
use crate::space::{ProductNode, ProductSpace};
use crate::weights::WeightMap;

/// Largest set [`is_conflict_free`] will enumerate subsets of.
pub const MAX_CONFLICT_FREE_SET: usize = 20;

/// Instances with at most this many positive-weight nodes are always searched.
pub const MAX_POSITIVE_NODES: usize = 32;

/// Above [`MAX_POSITIVE_NODES`], the brute-force solvers still accept an
/// instance when it has at most this many candidate sets of size `<= k`.
pub const MAX_CANDIDATE_SETS: u64 = 1 << 32;

/// Number of subsets of size at most `k` of an `n`-set, saturating.
pub fn candidate_sets(n: usize, k: usize) -> u64 {
    let mut total: u64 = 1;
    let mut term: u64 = 1;
    for i in 1..=k.min(n) {
        // C(n, i) = C(n, i - 1) * (n - i + 1) / i, exact at every step.
        term = match (term as u128 * (n - i + 1) as u128 / i as u128).try_into() {
            Ok(t) => t,
            Err(_) => return u64::MAX,
        };
        total = total.saturating_add(term);
    }
    total
}

pub fn is_overlap_free(space: &ProductSpace, set: &[ProductNode]) -> Result<bool> {
    let idx = indices(space, set)?;
    Ok(overlap_free_indices(space, &idx))
}

fn overlap_free_indices(space: &ProductSpace, set: &[u64]) -> bool {
    for (a, &p) in set.iter().enumerate() {
        for &q in &set[a + 1..] {
            if space.overlap_index(p, q) {
                return false;
            }
        }
    }
    true
}

/// A set of two or more nodes where every dimension has a member that is an
/// ancestor-or-self, in that dimension, of every member. Sets with fewer than
/// two nodes are never conflicts.
pub fn is_conflict(space: &ProductSpace, set: &[ProductNode]) -> Result<bool> {
    let idx = indices(space, set)?;
    Ok(conflict_indices(space, &idx))
}

fn conflict_indices(space: &ProductSpace, set: &[u64]) -> bool {
    if set.len() < 2 {
        return false;
    }
    (0..space.dims()).all(|dim| {
        let tree = space.tree(dim);
        set.iter().any(|&c| {
            let top = space.coord(c, dim);
            set.iter().all(|&x| tree.is_ancestor_or_self(top, space.coord(x, dim)))
        })
    })
}

/// True iff no subset of two or more members is a conflict.
pub fn is_conflict_free(space: &ProductSpace, set: &[ProductNode]) -> Result<bool> {
    if set.len() > MAX_CONFLICT_FREE_SET {
        return Err(Error::Capacity(format!(
            "conflict-freeness check enumerates subsets of at most {MAX_CONFLICT_FREE_SET} nodes, got {}",
            set.len()
        )));
    }
    let idx = indices(space, set)?;
    let mut subset = Vec::with_capacity(idx.len());
    for mask in 1u32..(1u32 << idx.len()) {
        if mask.count_ones() < 2 {
            continue;
        }
        subset.clear();
        subset.extend((0..idx.len()).filter(|b| mask >> b & 1 == 1).map(|b| idx[b]));
        if conflict_indices(space, &subset) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn indices(space: &ProductSpace, set: &[ProductNode]) -> Result<Vec<u64>> {
    set.iter().map(|p| space.index_of(p)).collect()
}

/// Exact maximum-weight overlap-free set of at most `k` nodes.
pub fn brute_force_optimal(space: &ProductSpace, weights: &WeightMap, k: usize) -> Result<Solution> {
    search(space, weights, k, false)
}

/// Exact maximum-weight set of at most `k` nodes that is both overlap-free and conflict-free.
pub fn brute_force_conflict_free(space: &ProductSpace, weights: &WeightMap, k: usize) -> Result<Solution> {
    search(space, weights, k, true)
}

/// `k` large enough to be no restriction: the number of positive-weight nodes.
pub fn unbounded_k(weights: &WeightMap) -> usize {
    weights.positive().len().max(1)
}

struct Search<'a> {
    space: &'a ProductSpace,
    nodes: Vec<(u64, f64)>,
    /// `prefix[i]`: total weight of `nodes[..i]`.
    prefix: Vec<f64>,
    k: usize,
    conflict_free: bool,
    chosen: Vec<u64>,
    best: Vec<u64>,
    best_weight: f64,
}

fn search(space: &ProductSpace, weights: &WeightMap, k: usize, conflict_free: bool) -> Result<Solution> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if weights.len() != space.len() {
        return Err(Error::Structural("weight map does not match the space".into()));
    }
    let mut nodes = weights.positive();
    if nodes.len() > MAX_POSITIVE_NODES && candidate_sets(nodes.len(), k) > MAX_CANDIDATE_SETS {
        return Err(Error::Capacity(format!(
            "brute force over {} positive-weight nodes with k = {k} exceeds {MAX_CANDIDATE_SETS} candidate sets",
            nodes.len()
        )));
    }
    // Heaviest first so the bound below is a prefix sum. Zero weights never help.
    nodes.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut prefix = vec![0.0];
    for &(_, w) in &nodes {
        prefix.push(prefix.last().unwrap() + w);
    }
    let mut s = Search {
        space,
        nodes,
        prefix,
        k,
        conflict_free,
        chosen: Vec::new(),
        best: Vec::new(),
        best_weight: 0.0,
    };
    s.descend(0, 0.0);
    Ok(Solution::from_indices(space, weights, s.best))
}

impl Search<'_> {
    fn descend(&mut self, pos: usize, weight: f64) {
        if weight > self.best_weight {
            self.best_weight = weight;
            self.best = self.chosen.clone();
        }
        let room = self.k - self.chosen.len();
        if pos == self.nodes.len() || room == 0 {
            return;
        }
        // The `room` heaviest remaining nodes are the next `room` in sorted order.
        let end = (pos + room).min(self.nodes.len());
        if weight + (self.prefix[end] - self.prefix[pos]) <= self.best_weight {
            return;
        }
        let (v, w) = self.nodes[pos];
        if self.admissible(v) {
            self.chosen.push(v);
            self.descend(pos + 1, weight + w);
            self.chosen.pop();
        }
        self.descend(pos + 1, weight);
    }

    fn admissible(&self, v: u64) -> bool {
        if self.chosen.iter().any(|&c| self.space.overlap_index(c, v)) {
            return false;
        }
        if !self.conflict_free {
            return true;
        }
        // `chosen` is conflict-free already, so only subsets containing `v` need checking.
        let n = self.chosen.len();
        let mut subset = Vec::with_capacity(n + 1);
        for mask in 1u64..(1u64 << n) {
            subset.clear();
            subset.push(v);
            subset.extend((0..n).filter(|b| mask >> b & 1 == 1).map(|b| self.chosen[b]));
            if conflict_indices(self.space, &subset) {
                return false;
            }
        }
        true
    }
}
