//! The cascading-analysts dynamic program.
//!
//! For every product node `v` and budget `j <= k` the table holds the best
//! conflict-free, overlap-free subset of `Sub(v)` with at most `j` members.
//! A row is the best of three kinds of candidates: the empty set, `{v}` alone,
//! and, for each dimension along which `v` has children, the best allocation of
//! the budget across `C_i(v)` (a knapsack over the children in tree order).
//!
//! Only weights, cardinalities and the winning candidate kind are stored per
//! cell. Member sets are rebuilt on demand by re-running the child knapsack of
//! the nodes on the traceback path.
//!
//! Ties are resolved without tolerances: higher weight wins, then smaller
//! cardinality, then the earlier candidate in the fixed order
//! `empty, {v}, dimension 0, dimension 1, ...`. Inside the child knapsack a
//! later child only takes budget when that is strictly better.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::space::{ProductNode, ProductSpace};
use crate::weights::WeightMap;

/// Weight and cardinality of one table cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entry {
    pub weight: f64,
    pub card: u32,
}

impl Entry {
    pub const EMPTY: Entry = Entry { weight: 0.0, card: 0 };

    pub fn new(weight: f64, card: u32) -> Self {
        Self { weight, card }
    }

    /// Strict preference: heavier, or equally heavy with fewer members.
    #[inline]
    pub fn better_than(self, other: Entry) -> bool {
        self.weight > other.weight || (self.weight == other.weight && self.card < other.card)
    }

    #[inline]
    fn join(self, other: Entry) -> Entry {
        Entry { weight: self.weight + other.weight, card: self.card + other.card }
    }
}

/// Which candidate produced a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Choice {
    Empty,
    Itself,
    Split(usize),
}

impl Choice {
    fn encode(self) -> u8 {
        match self {
            Choice::Empty => 0,
            Choice::Itself => 1,
            Choice::Split(d) => d as u8 + 2,
        }
    }

    fn decode(code: u8) -> Choice {
        match code {
            0 => Choice::Empty,
            1 => Choice::Itself,
            d => Choice::Split(d as usize - 2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    k: usize,
}

impl SolverConfig {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if k >= u32::MAX as usize {
            return Err(Error::Config(format!("k = {k} is too large")));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Table layout. `Auto` follows the weight map's storage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    Auto,
    /// One row per product node, evaluated in decreasing index order.
    Dense,
    /// Rows only for nodes whose subspace holds positive weight; all other rows are empty.
    Sparse,
}

/// An overlap-free set of at most `k` product nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    /// Linear indices in increasing order.
    pub indices: Vec<u64>,
    pub segments: Vec<ProductNode>,
    pub total_weight: f64,
}

impl Solution {
    pub fn from_indices(space: &ProductSpace, weights: &WeightMap, mut indices: Vec<u64>) -> Self {
        indices.sort_unstable();
        let total_weight = indices.iter().map(|&i| weights.get(i)).sum();
        let segments = indices.iter().map(|&i| space.node_at(i)).collect();
        Self { indices, segments, total_weight }
    }

    pub fn empty() -> Self {
        Self { indices: Vec::new(), segments: Vec::new(), total_weight: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Best union of child rows under a shared budget. Each row must have
/// `budget + 1` entries, row `q` being the best solution of size at most `q`
/// inside that child. Returns the combined row for budgets `0..=budget`.
pub fn combine_children(children: &[&[Entry]], budget: usize) -> Vec<Entry> {
    let mut prefix = vec![Entry::EMPTY; budget + 1];
    let mut next = prefix.clone();
    for row in children {
        assert!(row.len() > budget, "child row shorter than the budget");
        fold_child(&prefix, |q| row[q], &mut next, None);
        std::mem::swap(&mut prefix, &mut next);
    }
    prefix
}

/// One step of the child knapsack: `out[j]` is the best `prefix[j - q] + child(q)`.
/// When `alloc` is given it receives the chosen `q` for every `j`.
#[inline]
fn fold_child(prefix: &[Entry], child: impl Fn(usize) -> Entry, out: &mut [Entry], mut alloc: Option<&mut [u32]>) {
    for j in 0..prefix.len() {
        let mut best = prefix[j];
        let mut best_q = 0;
        for q in 1..=j {
            let cand = prefix[j - q].join(child(q));
            if cand.better_than(best) {
                best = cand;
                best_q = q;
            }
        }
        out[j] = best;
        if let Some(a) = alloc.as_deref_mut() {
            a[j] = best_q as u32;
        }
    }
}

/// Picks the row entry for budget `j` from the node's own weight and its
/// per-dimension split rows (`None` for dimensions without children).
pub fn node_recurrence(own_weight: f64, splits: &[Option<Vec<Entry>>], j: usize) -> (Entry, Choice) {
    if j == 0 {
        return (Entry::EMPTY, Choice::Empty);
    }
    let mut best = (Entry::EMPTY, Choice::Empty);
    let itself = Entry::new(own_weight, 1);
    if itself.better_than(best.0) {
        best = (itself, Choice::Itself);
    }
    for (dim, row) in splits.iter().enumerate() {
        if let Some(row) = row {
            if row[j].better_than(best.0) {
                best = (row[j], Choice::Split(dim));
            }
        }
    }
    best
}

enum Slots {
    Dense,
    Sparse(HashMap<u64, usize>),
}

/// The filled dynamic-programming table.
pub struct DpTable<'a> {
    space: &'a ProductSpace,
    weights: &'a WeightMap,
    k: usize,
    slots: Slots,
    weight: Vec<f64>,
    card: Vec<u32>,
    choice: Vec<u8>,
}

/// Dense tables beyond this many cells are refused.
const MAX_DENSE_CELLS: u64 = 1 << 32;

impl<'a> DpTable<'a> {
    pub fn build(space: &'a ProductSpace, weights: &'a WeightMap, cfg: &SolverConfig, mode: Mode) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::Structural(format!(
                "weight map covers {} nodes, space has {}",
                weights.len(),
                space.len()
            )));
        }
        let k = cfg.k();
        let dense = match mode {
            Mode::Auto => weights.is_dense(),
            Mode::Dense => true,
            Mode::Sparse => false,
        };
        if dense {
            let cells = space.len().checked_mul(k as u64 + 1).filter(|&c| c <= MAX_DENSE_CELLS);
            let Some(cells) = cells else {
                return Err(Error::Capacity(format!(
                    "dense table for {} nodes and k = {k} is too large; use sparse weights",
                    space.len()
                )));
            };
            let mut table = Self::with_capacity(space, weights, k, Slots::Dense, cells as usize);
            let mut scratch = Scratch::new(k);
            for v in (0..space.len()).rev() {
                table.fill_row(v, v as usize, &mut scratch);
            }
            Ok(table)
        } else {
            // Nodes whose subspace contains a positive weight: the ancestor closure of the positives.
            let mut live: HashSet<u64> = HashSet::new();
            let mut frontier: Vec<u64> = weights.positive().into_iter().map(|(i, _)| i).collect();
            while let Some(v) = frontier.pop() {
                if live.insert(v) {
                    frontier.extend(space.parents_index(v));
                }
            }
            let mut order: Vec<u64> = live.into_iter().collect();
            order.sort_unstable_by(|a, b| b.cmp(a));
            let slots: HashMap<u64, usize> = order.iter().enumerate().map(|(s, &v)| (v, s)).collect();
            let cells = order.len() * (k + 1);
            let mut table = Self::with_capacity(space, weights, k, Slots::Sparse(slots), cells);
            let mut scratch = Scratch::new(k);
            for (slot, &v) in order.iter().enumerate() {
                table.fill_row(v, slot, &mut scratch);
            }
            Ok(table)
        }
    }

    fn with_capacity(space: &'a ProductSpace, weights: &'a WeightMap, k: usize, slots: Slots, cells: usize) -> Self {
        Self {
            space,
            weights,
            k,
            slots,
            weight: vec![0.0; cells],
            card: vec![0; cells],
            choice: vec![0; cells],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of materialized rows.
    pub fn rows(&self) -> usize {
        self.weight.len() / (self.k + 1)
    }

    #[inline]
    fn slot(&self, v: u64) -> Option<usize> {
        match &self.slots {
            Slots::Dense => Some(v as usize),
            Slots::Sparse(m) => m.get(&v).copied(),
        }
    }

    #[inline]
    fn cell(&self, slot: usize, j: usize) -> Entry {
        let c = slot * (self.k + 1) + j;
        Entry { weight: self.weight[c], card: self.card[c] }
    }

    fn fill_row(&mut self, v: u64, slot: usize, scratch: &mut Scratch) {
        let k = self.k;
        let own = Entry::new(match self.weights.dense_slice() {
            Some(w) => w[v as usize],
            None => self.weights.get(v),
        }, 1);
        let best = &mut scratch.best;
        best.fill((Entry::EMPTY, Choice::Empty));
        if own.better_than(Entry::EMPTY) {
            best[1..].fill((own, Choice::Itself));
        }
        for dim in 0..self.space.dims() {
            if self.space.tree(dim).is_leaf(self.space.coord(v, dim)) {
                continue;
            }
            scratch.prefix.fill(Entry::EMPTY);
            for c in self.space.children_along_index(v, dim) {
                let Some(cs) = self.slot(c) else { continue };
                fold_child(&scratch.prefix, |q| self.cell(cs, q), &mut scratch.next, None);
                std::mem::swap(&mut scratch.prefix, &mut scratch.next);
            }
            for (slot, &cand) in best[1..=k].iter_mut().zip(&scratch.prefix[1..=k]) {
                if cand.better_than(slot.0) {
                    *slot = (cand, Choice::Split(dim));
                }
            }
        }
        let base = slot * (k + 1);
        for (j, &(e, ch)) in best.iter().enumerate() {
            self.weight[base + j] = e.weight;
            self.card[base + j] = e.card;
            self.choice[base + j] = ch.encode();
        }
    }

    /// Weight and size of `S(v, j)`.
    pub fn entry(&self, v: u64, j: usize) -> Entry {
        assert!(j <= self.k, "budget {j} exceeds k = {}", self.k);
        self.slot(v).map_or(Entry::EMPTY, |s| self.cell(s, j))
    }

    pub fn choice(&self, v: u64, j: usize) -> Choice {
        assert!(j <= self.k, "budget {j} exceeds k = {}", self.k);
        self.slot(v)
            .map_or(Choice::Empty, |s| Choice::decode(self.choice[s * (self.k + 1) + j]))
    }

    /// Members of `S(v, j)` as linear indices, unsorted.
    pub fn set(&self, v: u64, j: usize) -> Vec<u64> {
        let mut out = Vec::new();
        let mut stack = vec![(v, j)];
        while let Some((v, j)) = stack.pop() {
            match self.choice(v, j) {
                Choice::Empty => {}
                Choice::Itself => out.push(v),
                Choice::Split(dim) => self.split_allocation(v, dim, j, &mut stack),
            }
        }
        out
    }

    /// Replays the child knapsack of `v` along `dim` with allocation tracking
    /// and pushes each child's share of budget `j`.
    fn split_allocation(&self, v: u64, dim: usize, j: usize, stack: &mut Vec<(u64, usize)>) {
        let children: Vec<(u64, usize)> = self
            .space
            .children_along_index(v, dim)
            .filter_map(|c| self.slot(c).map(|s| (c, s)))
            .collect();
        let width = j + 1;
        let mut alloc = vec![0u32; children.len() * width];
        let mut prefix = vec![Entry::EMPTY; width];
        let mut next = prefix.clone();
        for (m, &(_, cs)) in children.iter().enumerate() {
            fold_child(&prefix, |q| self.cell(cs, q), &mut next, Some(&mut alloc[m * width..(m + 1) * width]));
            std::mem::swap(&mut prefix, &mut next);
        }
        let mut remaining = j;
        for (m, &(c, _)) in children.iter().enumerate().rev() {
            let q = alloc[m * width + remaining] as usize;
            if q > 0 {
                stack.push((c, q));
            }
            remaining -= q;
        }
    }

    pub fn solution(&self, v: u64, j: usize) -> Solution {
        Solution::from_indices(self.space, self.weights, self.set(v, j))
    }
}

struct Scratch {
    best: Vec<(Entry, Choice)>,
    prefix: Vec<Entry>,
    next: Vec<Entry>,
}

impl Scratch {
    fn new(k: usize) -> Self {
        Self {
            best: vec![(Entry::EMPTY, Choice::Empty); k + 1],
            prefix: vec![Entry::EMPTY; k + 1],
            next: vec![Entry::EMPTY; k + 1],
        }
    }
}

/// Returns `S(r, k)`: the best conflict-free, overlap-free set of at most `k` nodes.
pub fn solve(space: &ProductSpace, weights: &WeightMap, cfg: &SolverConfig) -> Result<Solution> {
    solve_with_mode(space, weights, cfg, Mode::Auto)
}

pub fn solve_with_mode(space: &ProductSpace, weights: &WeightMap, cfg: &SolverConfig, mode: Mode) -> Result<Solution> {
    let table = DpTable::build(space, weights, cfg, mode)?;
    Ok(table.solution(0, cfg.k()))
}
